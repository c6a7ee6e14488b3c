//! Mark 1 style abstract machine over machine expressions, with optional
//! garbage collection and stack-chain removal, measuring reduction counts
//! and maximal state size.

use std::fmt;

use indexmap::IndexMap;
use rustc_hash::{FxBuildHasher, FxHashSet};
use thiserror::Error;

use crate::syntax::{
    alts_free_vars, alts_size, free_vars, free_vars_ordered, rename_alts, rename_var, rename_vars,
    size, Alt,
    Expr, Name, NameSupply,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MachineError {
    #[error("input is not closed: free variable(s) {}", .0.iter().map(|n| n.as_str()).collect::<Vec<_>>().join(", "))]
    NotClosed(Vec<Name>),
    #[error("input is not a machine expression")]
    NotMachineExpr,
    #[error("machine stuck: {0}")]
    Stuck(String),
}

/// Names of the machine transitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rule {
    Init,
    Unwind1,
    Unwind2,
    Unwind3,
    Lookup,
    Letrec,
    Subst,
    Branch,
    Seq,
    Update,
    Gc,
    SCRem,
}

impl Rule {
    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Init => "Init",
            Rule::Unwind1 => "Unwind1",
            Rule::Unwind2 => "Unwind2",
            Rule::Unwind3 => "Unwind3",
            Rule::Lookup => "Lookup",
            Rule::Letrec => "Letrec",
            Rule::Subst => "Subst",
            Rule::Branch => "Branch",
            Rule::Seq => "Seq",
            Rule::Update => "Update",
            Rule::Gc => "GC",
            Rule::SCRem => "SCRem",
        }
    }

    /// Steps counted by `mln`.
    pub fn is_essential(self) -> bool {
        matches!(self, Rule::Subst | Rule::Branch | Rule::Seq)
    }

    /// GC and stack-chain removal may be applied at will.
    pub fn is_optional(self) -> bool {
        matches!(self, Rule::Gc | Rule::SCRem | Rule::Init)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Case alternatives waiting on the stack, with cached size and free
/// variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CaseFrame {
    pub tycon: Name,
    pub alts: Vec<Alt>,
    size: usize,
    fv: Vec<Name>,
}

impl CaseFrame {
    pub fn new(tycon: Name, alts: Vec<Alt>) -> Self {
        let size = 1 + alts_size(&alts);
        let fv = alts_free_vars(&alts);
        CaseFrame {
            tycon,
            alts,
            size,
            fv,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn free_vars(&self) -> &[Name] {
        &self.fv
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StackEntry {
    AppArg(Name),
    SeqArg(Name),
    CaseAlts(CaseFrame),
    Update(Name),
}

impl StackEntry {
    /// Size contribution: the application, `seq` or `case` node the entry
    /// stands for. Update markers are free.
    pub fn size(&self) -> usize {
        match self {
            StackEntry::AppArg(_) | StackEntry::SeqArg(_) => 1,
            StackEntry::CaseAlts(frame) => frame.size,
            StackEntry::Update(_) => 0,
        }
    }
}

impl fmt::Display for StackEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StackEntry::AppArg(x) => write!(f, "#app({x})"),
            StackEntry::SeqArg(x) => write!(f, "#seq({x})"),
            StackEntry::Update(x) => write!(f, "#upd({x})"),
            StackEntry::CaseAlts(frame) => {
                write!(f, "#case(")?;
                for (i, a) in frame.alts.iter().enumerate() {
                    if i > 0 {
                        write!(f, "; ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Debug)]
struct HeapCell {
    expr: Expr,
    size: usize,
    fv: Vec<Name>,
    mark: u32,
}

impl HeapCell {
    fn new(expr: Expr) -> Self {
        HeapCell {
            size: size(&expr),
            fv: free_vars_ordered(&expr),
            expr,
            mark: 0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GcMode {
    Eager,
    /// Collect after every n-th non-optional transition.
    EveryN(u64),
    Never,
}

impl fmt::Display for GcMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GcMode::Eager => write!(f, "eager"),
            GcMode::EveryN(n) => write!(f, "every:{n}"),
            GcMode::Never => write!(f, "never"),
        }
    }
}

impl std::str::FromStr for GcMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "eager" => Ok(GcMode::Eager),
            "never" => Ok(GcMode::Never),
            _ => {
                let n = s
                    .strip_prefix("every:")
                    .and_then(|n| n.parse::<u64>().ok())
                    .filter(|&n| n >= 1)
                    .ok_or_else(|| format!("invalid gc mode {s:?}: expected eager, never or every:N"))?;
                Ok(GcMode::EveryN(n))
            }
        }
    }
}

pub const DEFAULT_MAX_STEPS: u64 = 10_000_000;

/// Which states right after an (Update) are left out of `mspmax`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum SpaceExclusion {
    /// Only updates whose control is a constructor application.
    #[default]
    Constructors,
    /// Additionally updates of an abstraction that is consumed by `seq`
    /// right afterwards.
    ConstructorsAndSeq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub gc_mode: GcMode,
    pub screm_enabled: bool,
    pub max_steps: u64,
    pub record_trace: bool,
    pub exclusion: SpaceExclusion,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            gc_mode: GcMode::Eager,
            screm_enabled: true,
            max_steps: DEFAULT_MAX_STEPS,
            record_trace: false,
            exclusion: SpaceExclusion::Constructors,
        }
    }
}

impl RunConfig {
    /// Eager collection with stack-chain removal: the configuration under
    /// which `mspmax` is meaningful.
    pub fn measuring() -> Self {
        RunConfig::default()
    }

    pub fn with_trace(mut self) -> Self {
        self.record_trace = true;
        self
    }

    pub fn with_gc(mut self, mode: GcMode) -> Self {
        self.gc_mode = mode;
        self
    }

    pub fn with_max_steps(mut self, n: u64) -> Self {
        self.max_steps = n;
        self
    }

    pub fn with_exclusion(mut self, exclusion: SpaceExclusion) -> Self {
        self.exclusion = exclusion;
        self
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Measures {
    pub mln: u64,
    pub mlnall: u64,
    pub mspmax: usize,
    pub gc_runs: u64,
    pub screm_steps: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceRecord {
    pub i: u64,
    pub rule: Rule,
    pub size: usize,
}

#[derive(Clone, Debug)]
pub enum Outcome {
    Final(MachineState),
    /// Demand on a variable without a heap binding.
    Blackhole(Name),
    StepLimit,
}

impl Outcome {
    pub fn is_final(&self) -> bool {
        matches!(self, Outcome::Final(_))
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::Final(_) => "final",
            Outcome::Blackhole(_) => "blackhole",
            Outcome::StepLimit => "step-limit",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub measures: Measures,
    pub trace: Option<Vec<TraceRecord>>,
}

/// Result of attempting one non-optional transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Step {
    Applied(Rule),
    Final,
    Blackhole(Name),
}

/// Heap, control expression and stack. The stack top is the last element.
#[derive(Clone, Debug)]
pub struct MachineState {
    heap: IndexMap<Name, HeapCell, FxBuildHasher>,
    control: Expr,
    stack: Vec<StackEntry>,
    pending: FxHashSet<Name>,
    supply: NameSupply,
    heap_size: usize,
    stack_size: usize,
    epoch: u32,
}

impl MachineState {
    /// Initial state `⟨∅ | e | []⟩`.
    pub fn new(e: Expr) -> Self {
        MachineState {
            heap: IndexMap::default(),
            supply: NameSupply::for_expr(&e),
            control: e,
            stack: Vec::new(),
            pending: FxHashSet::default(),
            heap_size: 0,
            stack_size: 0,
            epoch: 0,
        }
    }

    /// Builds an arbitrary state; the stack is given top first.
    pub fn from_parts(heap: Vec<(Name, Expr)>, control: Expr, stack_top_first: Vec<StackEntry>) -> Self {
        let mut st = MachineState::new(control);
        for (n, e) in heap {
            st.supply.reserve(&n);
            st.supply.reserve_expr(&e);
            st.insert_heap(n, e);
        }
        for entry in stack_top_first.into_iter().rev() {
            match &entry {
                StackEntry::AppArg(x) | StackEntry::SeqArg(x) => st.supply.reserve(x),
                StackEntry::Update(x) => {
                    st.supply.reserve(x);
                    st.pending.insert(x.clone());
                }
                StackEntry::CaseAlts(frame) => {
                    for a in &frame.alts {
                        st.supply.reserve_expr(&a.rhs);
                        a.binders.iter().for_each(|b| st.supply.reserve(b));
                    }
                }
            }
            st.push(entry);
        }
        st
    }

    pub fn control(&self) -> &Expr {
        &self.control
    }

    pub fn heap(&self) -> impl Iterator<Item = (&Name, &Expr)> {
        self.heap.iter().map(|(n, c)| (n, &c.expr))
    }

    pub fn heap_len(&self) -> usize {
        self.heap.len()
    }

    pub fn lookup(&self, x: &Name) -> Option<&Expr> {
        self.heap.get(x).map(|c| &c.expr)
    }

    /// Stack entries, top first.
    pub fn stack(&self) -> impl Iterator<Item = &StackEntry> {
        self.stack.iter().rev()
    }

    pub fn stack_len(&self) -> usize {
        self.stack.len()
    }

    /// Sum of heap right-hand sides, the control and the stack entries.
    pub fn state_size(&self) -> usize {
        self.heap_size + size(&self.control) + self.stack_size
    }

    /// The state read as an expression `letrec Γ in control` (stack ignored).
    pub fn to_expr(&self) -> Expr {
        if self.heap.is_empty() {
            self.control.clone()
        } else {
            Expr::LetRec(
                self.heap
                    .iter()
                    .map(|(n, c)| (n.clone(), c.expr.clone()))
                    .collect(),
                Box::new(self.control.clone()),
            )
        }
    }

    fn insert_heap(&mut self, name: Name, expr: Expr) {
        let cell = HeapCell::new(expr);
        self.heap_size += cell.size;
        if let Some(old) = self.heap.insert(name, cell) {
            self.heap_size -= old.size;
        }
    }

    fn push(&mut self, entry: StackEntry) {
        self.stack_size += entry.size();
        self.stack.push(entry);
    }

    fn pop(&mut self) -> Option<StackEntry> {
        let e = self.stack.pop()?;
        self.stack_size -= e.size();
        Some(e)
    }

    /// Applies the unique non-optional transition, if any.
    pub fn step(&mut self) -> Result<Step, MachineError> {
        let control = std::mem::replace(&mut self.control, Expr::hole());
        match control {
            Expr::Var(x) => match self.heap.swap_remove(&x) {
                Some(cell) => {
                    self.heap_size -= cell.size;
                    self.control = cell.expr;
                    self.pending.insert(x.clone());
                    self.push(StackEntry::Update(x));
                    Ok(Step::Applied(Rule::Lookup))
                }
                None => {
                    self.control = Expr::Var(x.clone());
                    Ok(Step::Blackhole(x))
                }
            },
            Expr::App(f, arg) => {
                let Expr::Var(y) = *arg else {
                    self.control = Expr::App(f, arg);
                    return Err(MachineError::NotMachineExpr);
                };
                self.control = *f;
                self.push(StackEntry::AppArg(y));
                Ok(Step::Applied(Rule::Unwind1))
            }
            Expr::Seq(first, second) => {
                let Expr::Var(y) = *second else {
                    self.control = Expr::Seq(first, second);
                    return Err(MachineError::NotMachineExpr);
                };
                self.control = *first;
                self.push(StackEntry::SeqArg(y));
                Ok(Step::Applied(Rule::Unwind2))
            }
            Expr::Case(k, scrut, alts) => {
                self.control = *scrut;
                self.push(StackEntry::CaseAlts(CaseFrame::new(k, alts)));
                Ok(Step::Applied(Rule::Unwind3))
            }
            Expr::LetRec(mut binds, body) => {
                let mut body = *body;
                let clashes: Vec<Name> = binds
                    .iter()
                    .map(|(n, _)| n)
                    .filter(|n| self.heap.contains_key(*n) || self.pending.contains(*n))
                    .cloned()
                    .collect();
                if !clashes.is_empty() {
                    let mut map = std::collections::HashMap::new();
                    for old in clashes {
                        let new = self.supply.fresh(old.as_str());
                        map.insert(old, new);
                    }
                    for (n, rhs) in binds.iter_mut() {
                        if let Some(nn) = map.get(n) {
                            *n = nn.clone();
                        }
                        rename_vars(rhs, &map, &mut self.supply);
                    }
                    rename_vars(&mut body, &map, &mut self.supply);
                }
                for (n, rhs) in binds {
                    self.insert_heap(n, rhs);
                }
                self.control = body;
                Ok(Step::Applied(Rule::Letrec))
            }
            v @ (Expr::Lam(..) | Expr::Con(..)) => {
                let Some(top) = self.stack.last() else {
                    self.control = v;
                    return Ok(Step::Final);
                };
                match (top, v) {
                    (StackEntry::AppArg(_), Expr::Lam(x, body)) => {
                        let Some(StackEntry::AppArg(y)) = self.pop() else { unreachable!() };
                        let mut body = *body;
                        rename_var(&mut body, &x, &y, &mut self.supply);
                        self.control = body;
                        Ok(Step::Applied(Rule::Subst))
                    }
                    (StackEntry::CaseAlts(_), Expr::Con(c, args)) => {
                        let Some(StackEntry::CaseAlts(frame)) = self.pop() else { unreachable!() };
                        let Some(alt) = frame.alts.into_iter().find(|a| a.con == c) else {
                            return Err(MachineError::Stuck(format!("no alternative for constructor {c}")));
                        };
                        if alt.binders.len() != args.len() {
                            return Err(MachineError::Stuck(format!("arity mismatch for constructor {c}")));
                        }
                        let mut rhs = alt.rhs;
                        let mut map = std::collections::HashMap::new();
                        for (b, a) in alt.binders.iter().zip(&args) {
                            match a {
                                Expr::Var(y) => {
                                    map.insert(b.clone(), y.clone());
                                }
                                _ => return Err(MachineError::NotMachineExpr),
                            }
                        }
                        rename_vars(&mut rhs, &map, &mut self.supply);
                        self.control = rhs;
                        Ok(Step::Applied(Rule::Branch))
                    }
                    (StackEntry::SeqArg(_), _) => {
                        let Some(StackEntry::SeqArg(y)) = self.pop() else { unreachable!() };
                        self.control = Expr::Var(y);
                        Ok(Step::Applied(Rule::Seq))
                    }
                    (StackEntry::Update(_), v) => {
                        let Some(StackEntry::Update(x)) = self.pop() else { unreachable!() };
                        self.pending.remove(&x);
                        self.insert_heap(x, v.clone());
                        self.control = v;
                        Ok(Step::Applied(Rule::Update))
                    }
                    (entry, v) => {
                        let msg = format!("value {v} against stack entry {entry}");
                        self.control = v;
                        Err(MachineError::Stuck(msg))
                    }
                }
            }
        }
    }

    /// Removes every heap binding unreachable from the control, the
    /// argument entries and the free variables of pending alternatives.
    /// Returns the number of bindings removed.
    pub fn collect_garbage(&mut self) -> usize {
        self.epoch = self.epoch.wrapping_add(1);
        if self.epoch == 0 {
            for c in self.heap.values_mut() {
                c.mark = 0;
            }
            self.epoch = 1;
        }
        let epoch = self.epoch;
        let mut work: Vec<usize> = Vec::new();
        let heap = &mut self.heap;
        let mut root = |n: &Name, work: &mut Vec<usize>| {
            if let Some(i) = heap.get_index_of(n) {
                let cell = &mut heap[i];
                if cell.mark != epoch {
                    cell.mark = epoch;
                    work.push(i);
                }
            }
        };
        for n in free_vars(&self.control) {
            root(&n, &mut work);
        }
        for entry in &self.stack {
            match entry {
                StackEntry::AppArg(x) | StackEntry::SeqArg(x) => root(x, &mut work),
                StackEntry::CaseAlts(frame) => frame.fv.iter().for_each(|x| root(x, &mut work)),
                StackEntry::Update(_) => {}
            }
        }
        while let Some(i) = work.pop() {
            let fv = std::mem::take(&mut self.heap[i].fv);
            for n in &fv {
                if let Some(j) = self.heap.get_index_of(n) {
                    let cell = &mut self.heap[j];
                    if cell.mark != epoch {
                        cell.mark = epoch;
                        work.push(j);
                    }
                }
            }
            self.heap[i].fv = fv;
        }
        let before = self.heap.len();
        let mut freed = 0;
        self.heap.retain(|_, c| {
            let live = c.mark == epoch;
            if !live {
                freed += c.size;
            }
            live
        });
        self.heap_size -= freed;
        before - self.heap.len()
    }

    /// True when the two topmost stack entries are update markers.
    pub fn screm_applicable(&self) -> bool {
        matches!(
            self.stack.as_slice(),
            [.., StackEntry::Update(_), StackEntry::Update(_)]
        )
    }

    /// One stack-chain removal: with `#upd(x):#upd(y)` on top, replaces `y`
    /// by `x` in heap, control and stack and drops the second marker.
    pub fn stack_chain_removal(&mut self) -> bool {
        if !self.screm_applicable() {
            return false;
        }
        let n = self.stack.len();
        let StackEntry::Update(x) = self.stack[n - 1].clone() else { unreachable!() };
        let StackEntry::Update(y) = self.stack.remove(n - 2) else { unreachable!() };
        self.pending.remove(&y);
        let mut map = std::collections::HashMap::with_capacity(1);
        map.insert(y.clone(), x.clone());
        let supply = &mut self.supply;
        for cell in self.heap.values_mut() {
            if cell.fv.contains(&y) {
                rename_vars(&mut cell.expr, &map, supply);
                cell.fv = free_vars_ordered(&cell.expr);
            }
        }
        rename_vars(&mut self.control, &map, supply);
        for entry in self.stack.iter_mut() {
            match entry {
                StackEntry::AppArg(z) | StackEntry::SeqArg(z) | StackEntry::Update(z) => {
                    if *z == y {
                        *z = x.clone();
                    }
                }
                StackEntry::CaseAlts(frame) => {
                    if frame.fv.contains(&y) {
                        rename_alts(&mut frame.alts, &map, supply);
                        frame.fv = alts_free_vars(&frame.alts);
                    }
                }
            }
        }
        true
    }

    /// True if the control is a value and the stack is empty.
    pub fn is_final(&self) -> bool {
        self.stack.is_empty() && matches!(self.control, Expr::Lam(..) | Expr::Con(..))
    }
}

impl fmt::Display for MachineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, (n, c)) in self.heap.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{n} = {}", c.expr)?;
        }
        write!(f, " | {} | [", self.control)?;
        for (i, e) in self.stack().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{e}")?;
        }
        write!(f, "]>")
    }
}

/// Runs the machine from `⟨∅ | e | []⟩`. The input must be a closed
/// machine expression.
pub fn run(e: &Expr, cfg: &RunConfig) -> Result<RunResult, MachineError> {
    let open: Vec<Name> = free_vars(e).into_iter().collect();
    if !open.is_empty() {
        return Err(MachineError::NotClosed(open));
    }
    if !crate::syntax::is_machine_expr(e) {
        return Err(MachineError::NotMachineExpr);
    }
    run_state(MachineState::new(e.clone()), cfg)
}

struct Recorder {
    measures: Measures,
    trace: Option<Vec<TraceRecord>>,
    /// Set after an excluded update until the next transition.
    suppressed: bool,
    index: u64,
}

impl Recorder {
    fn record(&mut self, rule: Rule, st: &MachineState) {
        self.index += 1;
        let sz = st.state_size();
        if !self.suppressed {
            self.measures.mspmax = self.measures.mspmax.max(sz);
        }
        if let Some(t) = &mut self.trace {
            t.push(TraceRecord {
                i: self.index,
                rule,
                size: sz,
            });
        }
    }
}

/// Runs the machine from an arbitrary state.
pub fn run_state(mut st: MachineState, cfg: &RunConfig) -> Result<RunResult, MachineError> {
    let mut rec = Recorder {
        measures: Measures::default(),
        trace: cfg.record_trace.then(Vec::new),
        suppressed: false,
        index: 0,
    };
    rec.record(Rule::Init, &st);
    // whether the last transition can have produced garbage
    let mut dirty = true;
    let outcome = loop {
        if cfg.screm_enabled {
            while st.stack_chain_removal() {
                rec.measures.screm_steps += 1;
                rec.record(Rule::SCRem, &st);
            }
        }
        let collect = match cfg.gc_mode {
            GcMode::Eager => dirty,
            GcMode::EveryN(n) => dirty && rec.measures.mlnall > 0 && rec.measures.mlnall % n == 0,
            GcMode::Never => false,
        };
        if collect {
            dirty = false;
            if st.collect_garbage() > 0 {
                rec.measures.gc_runs += 1;
                rec.record(Rule::Gc, &st);
            }
        }
        if rec.measures.mlnall >= cfg.max_steps {
            break Outcome::StepLimit;
        }
        let update_of_con = matches!(
            (st.stack.last(), &st.control),
            (Some(StackEntry::Update(_)), Expr::Con(..))
        );
        match st.step()? {
            Step::Final => break Outcome::Final(st),
            Step::Blackhole(x) => break Outcome::Blackhole(x),
            Step::Applied(rule) => {
                rec.measures.mlnall += 1;
                if rule.is_essential() {
                    rec.measures.mln += 1;
                }
                rec.suppressed = rule == Rule::Update
                    && (update_of_con
                        || cfg.exclusion == SpaceExclusion::ConstructorsAndSeq
                            && matches!(st.control, Expr::Lam(..))
                            && matches!(st.stack.last(), Some(StackEntry::SeqArg(_))));
                rec.record(rule, &st);
                // unwinding and lookup never make a binding unreachable
                dirty |= !matches!(rule, Rule::Unwind1 | Rule::Unwind2 | Rule::Unwind3 | Rule::Lookup);
            }
        }
    };
    let outcome = match outcome {
        Outcome::Final(mut st) => {
            if cfg.gc_mode == GcMode::Eager && st.collect_garbage() > 0 {
                rec.measures.gc_runs += 1;
                rec.record(Rule::Gc, &st);
            }
            Outcome::Final(st)
        }
        other => other,
    };
    Ok(RunResult {
        outcome,
        measures: rec.measures,
        trace: rec.trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_expr;

    fn p(s: &str) -> Expr {
        parse_expr(s).unwrap()
    }

    #[test]
    fn letrec_then_lookup() {
        let mut st = MachineState::new(p("letrec x = \\y.y in x x"));
        assert_eq!(st.step().unwrap(), Step::Applied(Rule::Letrec));
        assert_eq!(st.state_size(), 2);
        assert_eq!(st.step().unwrap(), Step::Applied(Rule::Unwind1));
        assert_eq!(st.step().unwrap(), Step::Applied(Rule::Lookup));
        assert_eq!(st.heap_len(), 0);
        let stack: Vec<_> = st.stack().cloned().collect();
        assert_eq!(
            stack,
            vec![StackEntry::Update(Name::new("x")), StackEntry::AppArg(Name::new("x"))]
        );
    }

    #[test]
    fn subst_identity() {
        let mut st = MachineState::from_parts(
            vec![],
            p("\\y.y"),
            vec![StackEntry::AppArg(Name::new("x"))],
        );
        assert_eq!(st.step().unwrap(), Step::Applied(Rule::Subst));
        assert_eq!(st.control(), &p("x"));
        assert_eq!(st.stack_len(), 0);
    }

    #[test]
    fn identity_program_measures() {
        let r = run(&p("letrec x = \\y.y in x x"), &RunConfig::default()).unwrap();
        assert!(r.outcome.is_final());
        assert_eq!(r.measures.mln, 1);
        assert_eq!(r.measures.mlnall, 7);
        if let Outcome::Final(st) = &r.outcome {
            assert!(crate::syntax::alpha_eq(st.control(), &p("\\y.y")));
        }
    }

    #[test]
    fn self_reference_is_a_blackhole() {
        let r = run(&p("letrec x = x in x"), &RunConfig::default()).unwrap();
        assert!(matches!(r.outcome, Outcome::Blackhole(_)));
    }

    #[test]
    fn value_is_final_immediately() {
        let r = run(&p("True"), &RunConfig::default()).unwrap();
        assert!(r.outcome.is_final());
        assert_eq!(r.measures, Measures { mspmax: 1, ..Measures::default() });
    }

    #[test]
    fn gc_examples() {
        let mut st = MachineState::from_parts(
            vec![(Name::new("x"), p("True")), (Name::new("z"), p("False"))],
            p("x"),
            vec![],
        );
        assert_eq!(st.collect_garbage(), 1);
        assert!(st.lookup(&Name::new("x")).is_some());
        assert_eq!(st.collect_garbage(), 0);

        let mut st = MachineState::from_parts(
            vec![(Name::new("x"), p("True"))],
            p("False"),
            vec![StackEntry::SeqArg(Name::new("x"))],
        );
        assert_eq!(st.collect_garbage(), 0);

        let mut st = MachineState::from_parts(vec![(Name::new("x"), p("True"))], p("False"), vec![]);
        assert_eq!(st.collect_garbage(), 1);
        assert_eq!(st.heap_len(), 0);
    }

    #[test]
    fn screm_examples() {
        let upd = |s: &str| StackEntry::Update(Name::new(s));
        let mut st = MachineState::from_parts(
            vec![(Name::new("a"), p("Cons y z"))],
            p("True"),
            vec![upd("x"), upd("y"), upd("z"), StackEntry::AppArg(Name::new("y"))],
        );
        assert!(st.stack_chain_removal());
        assert!(st.stack_chain_removal());
        assert!(!st.stack_chain_removal());
        let stack: Vec<_> = st.stack().cloned().collect();
        assert_eq!(stack, vec![upd("x"), StackEntry::AppArg(Name::new("x"))]);
        assert_eq!(st.lookup(&Name::new("a")), Some(&p("Cons x x")));

        let mut st = MachineState::from_parts(vec![], p("True"), vec![upd("x"), StackEntry::AppArg(Name::new("y"))]);
        assert!(!st.stack_chain_removal());

        let mut st = MachineState::from_parts(vec![], p("\\a.a"), vec![upd("x"), upd("y")]);
        assert!(st.stack_chain_removal());
        assert_eq!(st.stack().cloned().collect::<Vec<_>>(), vec![upd("x")]);
    }

    #[test]
    fn state_size_examples() {
        let st = MachineState::from_parts(vec![], p("True"), vec![StackEntry::Update(Name::new("x"))]);
        assert_eq!(st.state_size(), 1);
        let alts = vec![Alt::new("True", &[], p("x")), Alt::new("False", &[], p("x"))];
        let st = MachineState::from_parts(
            vec![],
            p("x"),
            vec![StackEntry::CaseAlts(CaseFrame::new(Name::new("Bool"), alts))],
        );
        assert_eq!(st.state_size(), 3);
    }

    #[test]
    fn gc_mode_parsing() {
        assert_eq!("eager".parse::<GcMode>().unwrap(), GcMode::Eager);
        assert_eq!("every:1000".parse::<GcMode>().unwrap(), GcMode::EveryN(1000));
        assert_eq!("never".parse::<GcMode>().unwrap(), GcMode::Never);
        assert!("every:0".parse::<GcMode>().is_err());
    }
}
