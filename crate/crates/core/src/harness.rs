//! Experiment runner: list generators, measured batches over a range of
//! input sizes, difference tables, adequacy checks and trace export.

use std::fmt::Write as _;
use std::io::{self, Write};

use thiserror::Error;

use crate::calculus::{evaluate, OracleOutcome, Strategy};
use crate::compile::{compile_program, translate_psi, CompileError};
use crate::machine::{run, GcMode, MachineError, Measures, Outcome, RunConfig, TraceRecord};
use crate::parser::{parse_program, ParseError};
use crate::syntax::{free_vars, is_machine_expr, size, Alt, Expr, Name};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("k={k}: evaluation hit a black hole on {name}")]
    Blackhole { k: usize, name: Name },
    #[error("k={k}: step limit reached")]
    StepLimit { k: usize },
    #[error("cannot draw an empty trace")]
    EmptyTrace,
    #[error("unknown experiment {0:?}")]
    UnknownExperiment(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Shapes of generated input lists.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ListShape {
    /// One `True` followed by `k-1` times `False`.
    OneTrueThenFalse,
    /// `k` times `True`.
    AllTrue,
    /// `k` inner lists `[True, True]`.
    InnerPairs,
}

/// Source text of a `k`-element list built from the library generators.
pub fn list_source(k: usize, shape: ListShape) -> String {
    match shape {
        ListShape::OneTrueThenFalse => format!("True : take {} falses", k.saturating_sub(1)),
        ListShape::AllTrue => format!("replicate {k} True"),
        ListShape::InnerPairs => format!("take {k} pairs"),
    }
}

/// Literal list `[True, ..., True]` of length `k`.
pub fn literal_list(k: usize) -> String {
    format!("[{}]", vec!["True"; k].join(", "))
}

/// Closed expression evaluating to the described list.
pub fn gen_list(k: usize, shape: ListShape) -> Result<Expr, HarnessError> {
    assert!(k >= 1, "lists have at least one element");
    let p = parse_program(&format!("main = {}", list_source(k, shape)))?;
    Ok(compile_program(&p)?)
}

/// A program template; `{list}` expands to the generated list, `{k}` to
/// the numeral `k` and `{literal}` to a literal list of length `k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub main: String,
    pub shape: ListShape,
}

impl Template {
    pub fn new(main: &str, shape: ListShape) -> Self {
        Template { main: main.to_string(), shape }
    }

    pub fn instantiate(&self, k: usize) -> String {
        let main = self
            .main
            .replace("{list}", &list_source(k, self.shape))
            .replace("{literal}", &literal_list(k))
            .replace("{k}", &k.to_string());
        format!("main = {main}")
    }

    pub fn compile(&self, k: usize) -> Result<Expr, HarnessError> {
        Ok(compile_program(&parse_program(&self.instantiate(k))?)?)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mode {
    Single(Template),
    /// First template minus second, measured once per listed gc mode.
    Diff { minuend: Template, subtrahend: Template, gc_modes: Vec<GcMode> },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExperimentSpec {
    pub name: String,
    pub ks: Vec<usize>,
    pub config: RunConfig,
    pub mode: Mode,
}

/// One table column. Diff rows hold signed differences and one `mspmax`
/// column per gc mode.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeasureRow {
    pub k: usize,
    pub mln: i64,
    pub mlnall: i64,
    pub mspmax: i64,
    pub gc_columns: Vec<(GcMode, i64)>,
}

fn measure(e: &Expr, cfg: &RunConfig, k: usize) -> Result<Measures, HarnessError> {
    let r = run(e, cfg)?;
    match r.outcome {
        Outcome::Final(_) => Ok(r.measures),
        Outcome::Blackhole(name) => Err(HarnessError::Blackhole { k, name }),
        Outcome::StepLimit => Err(HarnessError::StepLimit { k }),
    }
}

/// Runs one experiment, one row per `k`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<MeasureRow>, HarnessError> {
    assert!(spec.ks.windows(2).all(|w| w[0] < w[1]), "k values must increase");
    spec.ks
        .iter()
        .map(|&k| match &spec.mode {
            Mode::Single(t) => {
                let m = measure(&t.compile(k)?, &spec.config, k)?;
                Ok(MeasureRow {
                    k,
                    mln: m.mln as i64,
                    mlnall: m.mlnall as i64,
                    mspmax: m.mspmax as i64,
                    gc_columns: Vec::new(),
                })
            }
            Mode::Diff { minuend, subtrahend, gc_modes } => {
                let (a, b) = (minuend.compile(k)?, subtrahend.compile(k)?);
                let diff = |cfg: &RunConfig| -> Result<(i64, i64, i64), HarnessError> {
                    let (x, y) = (measure(&a, cfg, k)?, measure(&b, cfg, k)?);
                    Ok((
                        x.mln as i64 - y.mln as i64,
                        x.mlnall as i64 - y.mlnall as i64,
                        x.mspmax as i64 - y.mspmax as i64,
                    ))
                };
                let (mln, mlnall, mspmax) = diff(&spec.config)?;
                let gc_columns = gc_modes
                    .iter()
                    .map(|&g| Ok((g, diff(&spec.config.clone().with_gc(g))?.2)))
                    .collect::<Result<_, HarnessError>>()?;
                Ok(MeasureRow { k, mln, mlnall, mspmax, gc_columns })
            }
        })
        .collect()
}

fn range(start: usize, end: usize, step: usize) -> Vec<usize> {
    (start..=end).step_by(step).collect()
}

fn single(name: &str, main: &str, shape: ListShape, ks: Vec<usize>) -> ExperimentSpec {
    ExperimentSpec {
        name: name.to_string(),
        ks,
        config: RunConfig::default(),
        mode: Mode::Single(Template::new(main, shape)),
    }
}

/// Names accepted by [`named_experiment`].
pub const EXPERIMENTS: [&str; 4] = ["fold", "reverse", "fusion", "append"];

/// The standard studies. `ks` overrides the default input sizes.
pub fn named_experiment(name: &str, ks: Option<Vec<usize>>) -> Result<Vec<ExperimentSpec>, HarnessError> {
    let pick = |default: Vec<usize>| ks.clone().unwrap_or(default);
    Ok(match name {
        "fold" => ["foldl", "foldl'", "foldr"]
            .iter()
            .map(|f| {
                let main = format!("{f} xor False ({{list}})");
                single(f, &main, ListShape::OneTrueThenFalse, pick(range(25, 250, 25)))
            })
            .collect(),
        "reverse" => ["reverse", "reverse'"]
            .iter()
            .map(|f| {
                let main = format!("last ({f} ({{list}}))");
                single(f, &main, ListShape::AllTrue, pick(range(50, 400, 50)))
            })
            .collect(),
        "fusion" => vec![ExperimentSpec {
            name: "unfused minus fused".to_string(),
            ks: pick(range(100, 1000, 100)),
            config: RunConfig::default(),
            mode: Mode::Diff {
                minuend: Template::new("last (comp concat (map tail) ({list}))", ListShape::InnerPairs),
                subtrahend: Template::new("last (concatMap tail ({list}))", ListShape::InnerPairs),
                gc_modes: vec![GcMode::Eager, GcMode::EveryN(1000), GcMode::EveryN(2000), GcMode::Never],
            },
        }],
        "append" => {
            let ks = pick(vec![12, 13, 14, 200, 400, 600, 800, 1000]);
            vec![
                single(
                    "shared",
                    "letrec xs = {literal} in last ((xs ++ xs) ++ (xs ++ xs))",
                    ListShape::AllTrue,
                    ks.clone(),
                ),
                single(
                    "unshared",
                    "letrec n = {k} in last ((replicate n True ++ replicate n True) ++ (replicate n True ++ replicate n True))",
                    ListShape::AllTrue,
                    ks,
                ),
            ]
        }
        other => return Err(HarnessError::UnknownExperiment(other.to_string())),
    })
}

/// Writes a measure table: header plus one record per row.
pub fn emit_csv<W: Write>(rows: &[MeasureRow], out: &mut W) -> io::Result<()> {
    let extra: Vec<String> = rows
        .first()
        .map(|r| r.gc_columns.iter().map(|(g, _)| format!("mspmax_{g}")).collect())
        .unwrap_or_default();
    let mut header = String::from("k,mln,mlnall,mspmax");
    for c in &extra {
        header.push(',');
        header.push_str(c);
    }
    writeln!(out, "{header}")?;
    for r in rows {
        write!(out, "{},{},{},{}", r.k, r.mln, r.mlnall, r.mspmax)?;
        for (_, v) in &r.gc_columns {
            write!(out, ",{v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Writes a trace: header plus one record per step.
pub fn emit_trace_csv<W: Write>(trace: &[TraceRecord], out: &mut W) -> io::Result<()> {
    writeln!(out, "i,rule,size")?;
    for t in trace {
        writeln!(out, "{},{},{}", t.i, t.rule.as_str(), t.size)?;
    }
    Ok(())
}

/// A standalone LaTeX document plotting `(i, size)` of a trace.
pub fn emit_tikz(trace: &[TraceRecord]) -> Result<String, HarnessError> {
    let first = trace.first().ok_or(HarnessError::EmptyTrace)?;
    let last = trace.last().expect("non-empty");
    let ymax = trace.iter().map(|t| t.size).max().unwrap_or(0);
    let mut s = String::new();
    s.push_str("\\documentclass{standalone}\n\\usepackage{pgfplots}\n\\pgfplotsset{compat=1.16}\n");
    s.push_str("\\begin{document}\n\\begin{tikzpicture}\n");
    let _ = writeln!(
        s,
        "\\begin{{axis}}[xlabel={{$i$}}, ylabel={{$\\mathtt{{size}}(s_i)$}}, xmin={}, xmax={}, ymin=0, ymax={}, grid=major]",
        first.i,
        last.i.max(first.i + 1),
        ymax.max(1)
    );
    s.push_str("\\addplot[mark=none] coordinates {\n");
    for t in trace {
        let _ = writeln!(s, "({},{})", t.i, t.size);
    }
    s.push_str("};\n\\end{axis}\n\\end{tikzpicture}\n\\end{document}\n");
    Ok(s)
}

/// Machine and calculus measures of one closed expression.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Adequacy {
    pub mln: u64,
    pub rln: u64,
    /// Present only for machine expressions.
    pub space: Option<(usize, usize)>,
}

impl Adequacy {
    pub fn time_ok(&self) -> bool {
        self.mln == self.rln
    }

    pub fn space_ok(&self) -> bool {
        self.space.is_none_or(|(m, s)| m == s)
    }
}

/// Compares the machine on the translated expression with the calculus on
/// the source. Returns `None` when the calculus does not converge within
/// `max_steps`.
pub fn check_adequacy(e: &Expr, cfg: &RunConfig, max_steps: u64) -> Result<Option<Adequacy>, MachineError> {
    let o = evaluate(e, Strategy::Lrpgc, max_steps);
    if !o.outcome.converged() {
        return Ok(None);
    }
    let m = run(&translate_psi(e), cfg)?;
    let space = if is_machine_expr(e) {
        let direct = run(e, cfg)?;
        Some((direct.measures.mspmax, o.spmax))
    } else {
        None
    };
    Ok(Some(Adequacy { mln: m.measures.mln, rln: o.rln, space }))
}

/// True when the machine's maximal space on a closed machine expression
/// differs from the calculus value.
pub fn space_mismatch(e: &Expr) -> bool {
    if !is_machine_expr(e) || !free_vars(e).is_empty() {
        return false;
    }
    let o = evaluate(e, Strategy::Lrpgc, 10_000);
    if !matches!(o.outcome, OracleOutcome::Whnf(_)) {
        return false;
    }
    match run(e, &RunConfig::default()) {
        Ok(m) => m.outcome.is_final() && m.measures.mspmax != o.spmax,
        Err(_) => false,
    }
}

/// Greedy shrinking: repeatedly replaces subterms by smaller candidates
/// while `keep` still holds.
pub fn minimize(e: &Expr, keep: impl Fn(&Expr) -> bool) -> Expr {
    let mut best = e.clone();
    'outer: loop {
        for cand in shrink_candidates(&best) {
            if size(&cand) < size(&best) || count_nodes(&cand) < count_nodes(&best) {
                if keep(&cand) {
                    best = cand;
                    continue 'outer;
                }
            }
        }
        return best;
    }
}

fn count_nodes(e: &Expr) -> usize {
    match e {
        Expr::Var(_) => 1,
        Expr::Lam(_, b) => 1 + count_nodes(b),
        Expr::App(f, a) | Expr::Seq(f, a) => 1 + count_nodes(f) + count_nodes(a),
        Expr::LetRec(bs, body) => 1 + count_nodes(body) + bs.iter().map(|(_, r)| count_nodes(r)).sum::<usize>(),
        Expr::Con(_, args) => 1 + args.iter().map(count_nodes).sum::<usize>(),
        Expr::Case(_, s, alts) => 1 + count_nodes(s) + alts.iter().map(|a| count_nodes(&a.rhs)).sum::<usize>(),
    }
}

/// All expressions obtained by one local simplification.
fn shrink_candidates(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    let atoms = [Expr::con("True", vec![]), Expr::con("Nil", vec![]), Expr::lam("u", Expr::var("u"))];
    let here: Vec<Expr> = match e {
        Expr::Var(_) => Vec::new(),
        Expr::Lam(_, b) => vec![(**b).clone()],
        Expr::App(f, a) | Expr::Seq(f, a) => vec![(**f).clone(), (**a).clone()],
        Expr::LetRec(bs, body) => {
            let mut v = vec![(**body).clone()];
            for i in 0..bs.len() {
                if bs.len() > 1 {
                    let mut rest = bs.clone();
                    rest.remove(i);
                    v.push(Expr::LetRec(rest, body.clone()));
                }
            }
            v
        }
        Expr::Con(_, args) => args.clone(),
        Expr::Case(_, s, alts) => {
            let mut v = vec![(**s).clone()];
            v.extend(alts.iter().map(|a| a.rhs.clone()));
            v
        }
    };
    out.extend(here);
    if !matches!(e, Expr::Var(_)) {
        out.extend(atoms.iter().filter(|a| *a != e).cloned());
    }
    // one step inside each child
    match e {
        Expr::Var(_) => {}
        Expr::Lam(x, b) => {
            for c in shrink_candidates(b) {
                out.push(Expr::Lam(x.clone(), Box::new(c)));
            }
        }
        Expr::App(f, a) => {
            for c in shrink_candidates(f) {
                out.push(Expr::App(Box::new(c), a.clone()));
            }
            for c in shrink_candidates(a) {
                out.push(Expr::App(f.clone(), Box::new(c)));
            }
        }
        Expr::Seq(f, a) => {
            for c in shrink_candidates(f) {
                out.push(Expr::Seq(Box::new(c), a.clone()));
            }
            for c in shrink_candidates(a) {
                out.push(Expr::Seq(f.clone(), Box::new(c)));
            }
        }
        Expr::LetRec(bs, body) => {
            for c in shrink_candidates(body) {
                out.push(Expr::LetRec(bs.clone(), Box::new(c)));
            }
            for (i, (_, r)) in bs.iter().enumerate() {
                for c in shrink_candidates(r) {
                    let mut nb = bs.clone();
                    nb[i].1 = c;
                    out.push(Expr::LetRec(nb, body.clone()));
                }
            }
        }
        Expr::Con(n, args) => {
            for (i, a) in args.iter().enumerate() {
                for c in shrink_candidates(a) {
                    let mut na = args.clone();
                    na[i] = c;
                    out.push(Expr::Con(n.clone(), na));
                }
            }
        }
        Expr::Case(k, s, alts) => {
            for c in shrink_candidates(s) {
                out.push(Expr::Case(k.clone(), Box::new(c), alts.clone()));
            }
            for (i, a) in alts.iter().enumerate() {
                for c in shrink_candidates(&a.rhs) {
                    let mut na: Vec<Alt> = alts.clone();
                    na[i].rhs = c;
                    out.push(Expr::Case(k.clone(), s.clone(), na));
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::{evaluate, OracleOutcome};
    use crate::machine::Rule;

    /// Deep-forces a closed data value through the calculus.
    fn force(e: &Expr) -> String {
        let OracleOutcome::Whnf(w) = evaluate(e, Strategy::Lrp, 100_000).outcome else {
            panic!("no value: {e}")
        };
        let (env, mut v) = match w {
            Expr::LetRec(env, body) => (env, *body),
            v => (Vec::new(), v),
        };
        while let Expr::Var(x) = &v {
            v = env.iter().find(|(n, _)| n == x).expect("bound").1.clone();
        }
        let Expr::Con(c, args) = v else { return "<fun>".into() };
        let wrap = |a: Expr| if env.is_empty() { a } else { Expr::LetRec(env.clone(), Box::new(a)) };
        let parts: Vec<String> = args.into_iter().map(|a| force(&wrap(a))).collect();
        if parts.is_empty() { c.to_string() } else { format!("{c}({})", parts.join(",")) }
    }

    #[test]
    fn generated_lists_evaluate_to_their_shape() {
        assert_eq!(force(&gen_list(1, ListShape::AllTrue).unwrap()), "Cons(True,Nil)");
        assert_eq!(
            force(&gen_list(3, ListShape::OneTrueThenFalse).unwrap()),
            "Cons(True,Cons(False,Cons(False,Nil)))"
        );
        assert_eq!(
            force(&gen_list(2, ListShape::InnerPairs).unwrap()),
            "Cons(Cons(True,Cons(True,Nil)),Cons(Cons(True,Cons(True,Nil)),Nil))"
        );
    }

    #[test]
    fn list_sources() {
        assert_eq!(list_source(3, ListShape::OneTrueThenFalse), "True : take 2 falses");
        assert_eq!(list_source(1, ListShape::AllTrue), "replicate 1 True");
        assert_eq!(list_source(2, ListShape::InnerPairs), "take 2 pairs");
        assert_eq!(literal_list(2), "[True, True]");
    }

    #[test]
    fn template_instantiation() {
        let t = Template::new("last ({list})", ListShape::AllTrue);
        assert_eq!(t.instantiate(4), "main = last (replicate 4 True)");
    }

    #[test]
    fn csv_shapes() {
        let mut buf = Vec::new();
        emit_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,mln,mlnall,mspmax\n");
        let mut buf = Vec::new();
        let row = MeasureRow { k: 1, mln: 2, mlnall: 3, mspmax: 4, gc_columns: vec![] };
        emit_csv(&[row], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,mln,mlnall,mspmax\n1,2,3,4\n");
        let mut buf = Vec::new();
        emit_trace_csv(&[], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "i,rule,size\n");
    }

    #[test]
    fn tikz_output() {
        assert!(matches!(emit_tikz(&[]), Err(HarnessError::EmptyTrace)));
        let tr = [
            TraceRecord { i: 1, rule: Rule::Init, size: 3 },
            TraceRecord { i: 2, rule: Rule::Unwind1, size: 5 },
        ];
        let s = emit_tikz(&tr).unwrap();
        assert!(s.contains("(1,3)") && s.contains("(2,5)"));
        assert!(s.contains("xlabel={$i$}"));
    }

    #[test]
    fn minimizer_shrinks() {
        let e = crate::parser::parse_expr("(\\x.x) (case True of { True -> False; False -> True })").unwrap();
        let small = minimize(&e, |c| matches!(c, Expr::App(..)));
        assert!(size(&small) < size(&e));
        assert!(matches!(small, Expr::App(..)));
    }
}
