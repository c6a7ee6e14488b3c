//! Seeded generators of closed, well-typed test expressions.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::compile::link;
use crate::parser::parse_program;
use crate::prelude::load_prelude;
use crate::syntax::{Alt, Expr, Name};

/// Types of generated expressions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ty {
    Bool,
    List(Box<Ty>),
    Fun(Box<Ty>, Box<Ty>),
}

impl Ty {
    fn list_bool() -> Ty {
        Ty::List(Box::new(Ty::Bool))
    }

    fn fun(a: Ty, b: Ty) -> Ty {
        Ty::Fun(Box::new(a), Box::new(b))
    }
}

/// Random expression generator. Every binder it produces is distinct.
pub struct ExprGen {
    rng: ChaCha8Rng,
    next: usize,
    max_depth: u32,
}

impl ExprGen {
    pub fn new(seed: u64, max_depth: u32) -> Self {
        ExprGen { rng: ChaCha8Rng::seed_from_u64(seed), next: 0, max_depth }
    }

    fn fresh(&mut self) -> Name {
        self.next += 1;
        Name::from(format!("v{}", self.next))
    }

    fn small_ty(&mut self) -> Ty {
        match self.rng.gen_range(0..4) {
            0 | 1 => Ty::Bool,
            2 => Ty::list_bool(),
            _ => Ty::fun(Ty::Bool, Ty::Bool),
        }
    }

    /// Closed expression of a random type.
    pub fn expr(&mut self) -> Expr {
        let ty = self.small_ty();
        self.gen(&ty, &mut Vec::new(), self.max_depth)
    }

    pub fn expr_of(&mut self, ty: &Ty) -> Expr {
        self.gen(ty, &mut Vec::new(), self.max_depth)
    }

    fn leaf(&mut self, ty: &Ty, env: &mut Vec<(Name, Ty)>) -> Expr {
        let vars: Vec<&Name> = env.iter().filter(|(_, t)| t == ty).map(|(n, _)| n).collect();
        if !vars.is_empty() && self.rng.gen_bool(0.6) {
            return Expr::Var((*vars.choose(&mut self.rng).unwrap()).clone());
        }
        match ty {
            Ty::Bool => Expr::con(if self.rng.gen_bool(0.5) { "True" } else { "False" }, vec![]),
            Ty::List(_) => Expr::con("Nil", vec![]),
            Ty::Fun(a, b) => {
                let x = self.fresh();
                env.push((x.clone(), (**a).clone()));
                let body = self.leaf(b, env);
                env.pop();
                Expr::Lam(x, Box::new(body))
            }
        }
    }

    fn gen(&mut self, ty: &Ty, env: &mut Vec<(Name, Ty)>, depth: u32) -> Expr {
        if depth == 0 {
            return self.leaf(ty, env);
        }
        let d = depth - 1;
        match self.rng.gen_range(0..10) {
            0 | 1 => self.leaf(ty, env),
            2 => {
                let a = self.small_ty();
                let f = self.gen(&Ty::fun(a.clone(), ty.clone()), env, d);
                let x = self.gen(&a, env, d);
                Expr::App(Box::new(f), Box::new(x))
            }
            3 => {
                let a = self.small_ty();
                let s = self.gen(&a, env, d);
                let t = self.gen(ty, env, d);
                Expr::Seq(Box::new(s), Box::new(t))
            }
            4 | 5 => self.gen_letrec(ty, env, d),
            6 => self.gen_case(ty, env, d),
            _ => self.gen_intro(ty, env, d),
        }
    }

    fn gen_intro(&mut self, ty: &Ty, env: &mut Vec<(Name, Ty)>, d: u32) -> Expr {
        match ty {
            Ty::Bool => self.leaf(ty, env),
            Ty::List(elem) => {
                if self.rng.gen_bool(0.25) {
                    Expr::con("Nil", vec![])
                } else {
                    let h = self.gen(elem, env, d);
                    let t = self.gen(ty, env, d);
                    Expr::con("Cons", vec![h, t])
                }
            }
            Ty::Fun(a, b) => {
                let x = self.fresh();
                env.push((x.clone(), (**a).clone()));
                let body = self.gen(b, env, d);
                env.pop();
                Expr::Lam(x, Box::new(body))
            }
        }
    }

    fn gen_letrec(&mut self, ty: &Ty, env: &mut Vec<(Name, Ty)>, d: u32) -> Expr {
        let n = self.rng.gen_range(1..=3);
        let mark = env.len();
        let mut names = Vec::with_capacity(n);
        for _ in 0..n {
            let x = self.fresh();
            let t = self.small_ty();
            env.push((x.clone(), t.clone()));
            names.push((x, t));
        }
        let binds = names
            .into_iter()
            .map(|(x, t)| {
                let rhs = self.gen(&t, env, d);
                (x, rhs)
            })
            .collect();
        let body = self.gen(ty, env, d);
        env.truncate(mark);
        Expr::LetRec(binds, Box::new(body))
    }

    fn gen_case(&mut self, ty: &Ty, env: &mut Vec<(Name, Ty)>, d: u32) -> Expr {
        if self.rng.gen_bool(0.5) {
            let s = self.gen(&Ty::Bool, env, d);
            let a = self.gen(ty, env, d);
            let b = self.gen(ty, env, d);
            Expr::Case(
                Name::new("Bool"),
                Box::new(s),
                vec![Alt { con: Name::new("True"), binders: vec![], rhs: a },
                     Alt { con: Name::new("False"), binders: vec![], rhs: b }],
            )
        } else {
            let s = self.gen(&Ty::list_bool(), env, d);
            let nil = self.gen(ty, env, d);
            let (h, t) = (self.fresh(), self.fresh());
            let mark = env.len();
            env.push((h.clone(), Ty::Bool));
            env.push((t.clone(), Ty::list_bool()));
            let cons = self.gen(ty, env, d);
            env.truncate(mark);
            Expr::Case(
                Name::new("List"),
                Box::new(s),
                vec![Alt { con: Name::new("Nil"), binders: vec![], rhs: nil },
                     Alt { con: Name::new("Cons"), binders: vec![h, t], rhs: cons }],
            )
        }
    }
}

/// `n` random closed expressions from one seed.
pub fn random_corpus(seed: u64, n: usize, max_depth: u32) -> Vec<Expr> {
    let mut g = ExprGen::new(seed, max_depth);
    (0..n).map(|_| g.expr()).collect()
}

/// Small programs built from library functions, linked into closed
/// expressions.
pub fn prelude_family() -> Vec<Expr> {
    let mut mains = Vec::new();
    for k in 1..=4 {
        for list in [format!("take {k} trues"), format!("replicate {k} False")] {
            mains.push(format!("foldr xor False ({list})"));
            mains.push(format!("foldl xor True ({list})"));
            mains.push(format!("foldl' xor False ({list})"));
            mains.push(format!("last (reverse ({list}))"));
            mains.push(format!("last (reverse' ({list}))"));
            mains.push(format!("last (({list}) ++ ({list}))"));
            mains.push(format!("last (map (xor True) ({list}))"));
            mains.push(format!("tail ({list})"));
        }
        mains.push(format!("last (concat (take {k} pairs))"));
        mains.push(format!("last (concatMap tail (take {k} pairs))"));
        mains.push(format!("last (comp concat (map tail) (take {k} pairs))"));
    }
    mains
        .into_iter()
        .map(|m| {
            let p = parse_program(&format!("main = {m}")).expect("family program parses");
            link(&p, load_prelude()).expect("family program links")
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::{bound_vars, free_vars, size};

    #[test]
    fn generation_is_deterministic() {
        assert_eq!(random_corpus(7, 50, 6), random_corpus(7, 50, 6));
    }

    #[test]
    fn generated_expressions_are_closed() {
        for e in random_corpus(1, 300, 8) {
            assert!(free_vars(&e).is_empty(), "{e}");
        }
    }

    #[test]
    fn binders_are_distinct() {
        for e in random_corpus(2, 100, 8) {
            let mut seen = std::collections::HashSet::new();
            count_binders(&e, &mut seen);
            assert_eq!(seen.len(), bound_vars(&e).len());
        }
    }

    fn count_binders(e: &Expr, seen: &mut std::collections::HashSet<Name>) {
        match e {
            Expr::Var(_) => {}
            Expr::Lam(x, b) => {
                assert!(seen.insert(x.clone()));
                count_binders(b, seen);
            }
            Expr::App(f, a) | Expr::Seq(f, a) => {
                count_binders(f, seen);
                count_binders(a, seen);
            }
            Expr::LetRec(bs, body) => {
                for (x, r) in bs {
                    assert!(seen.insert(x.clone()));
                    count_binders(r, seen);
                }
                count_binders(body, seen);
            }
            Expr::Con(_, args) => args.iter().for_each(|a| count_binders(a, seen)),
            Expr::Case(_, s, alts) => {
                count_binders(s, seen);
                for a in alts {
                    for x in &a.binders {
                        assert!(seen.insert(x.clone()));
                    }
                    count_binders(&a.rhs, seen);
                }
            }
        }
    }

    #[test]
    fn family_programs_are_closed() {
        let fam = prelude_family();
        assert!(fam.len() > 40);
        for e in &fam {
            assert!(free_vars(e).is_empty());
            assert!(size(e) > 0);
        }
    }
}
