//! Concrete syntax: a Haskell-like surface language for data declarations,
//! named definitions and a final `main` expression. Types are accepted and
//! discarded.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::syntax::{Alt, Binding, ConSig, DataDecl, DataEnv, Expr, Name};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character {0:?}")]
    Lexical(char),
    #[error("expected {expected}, found {found}")]
    Unexpected { expected: String, found: String },
    #[error("unknown constructor {0}")]
    UnknownConstructor(String),
    #[error("constructor {con} expects {expected} argument(s), got {got}")]
    Arity {
        con: String,
        expected: usize,
        got: usize,
    },
    #[error("duplicate binder {0}")]
    DuplicateBinder(String),
    #[error("case is missing an alternative for {0}")]
    MissingAlternative(String),
    #[error("duplicate alternative for {0}")]
    DuplicateAlternative(String),
    #[error("alternative {con} does not belong to type {tycon}")]
    ForeignAlternative { con: String, tycon: String },
    #[error("{0}")]
    Declaration(String),
    #[error("program has no main definition")]
    MissingMain,
    #[error("main must be the last definition")]
    MainNotLast,
}

/// A parsed program: data declarations, definitions in source order, and
/// the main expression.
#[derive(Clone, Debug)]
pub struct Program {
    pub data_decls: Vec<DataDecl>,
    pub defs: Vec<Binding>,
    pub main: Expr,
    pub env: DataEnv,
}

impl Program {
    /// Program consisting of a bare main expression over the built-in types.
    pub fn from_main(main: Expr) -> Self {
        Program {
            data_decls: Vec::new(),
            defs: Vec::new(),
            main,
            env: DataEnv::builtin(),
        }
    }
}

impl fmt::Display for Program {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in &self.data_decls {
            let width = d.cons.iter().map(|c| c.arity).max().unwrap_or(0);
            let vars: Vec<String> = (0..width).map(|i| format!("a{i}")).collect();
            write!(f, "data {}", d.tycon)?;
            for v in &vars {
                write!(f, " {v}")?;
            }
            write!(f, " =")?;
            for (i, c) in d.cons.iter().enumerate() {
                if i > 0 {
                    write!(f, " |")?;
                }
                write!(f, " {}", c.name)?;
                for v in &vars[..c.arity] {
                    write!(f, " {v}")?;
                }
            }
            writeln!(f, ";")?;
        }
        for (n, e) in &self.defs {
            if n.is_operator() {
                writeln!(f, "({n}) = {e};")?;
            } else {
                writeln!(f, "{n} = {e};")?;
            }
        }
        writeln!(f, "main = {}", self.main)
    }
}

// ---------------------------------------------------------------------------
// Lexer

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Con(String),
    Int(usize),
    Op(String),
    Backslash,
    TyLam,
    Dot,
    Comma,
    Semi,
    Eq,
    Arrow,
    DColon,
    Colon,
    Bar,
    LParen,
    RParen,
    LBrack,
    RBrack,
    LBrace,
    RBrace,
    Letrec,
    In,
    Case,
    Of,
    Seq,
    Data,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Tok::Ident(s) | Tok::Con(s) | Tok::Op(s) => return write!(f, "`{s}`"),
            Tok::Int(n) => return write!(f, "`{n}`"),
            Tok::Backslash => "`\\`",
            Tok::TyLam => "`/\\`",
            Tok::Dot => "`.`",
            Tok::Comma => "`,`",
            Tok::Semi => "`;`",
            Tok::Eq => "`=`",
            Tok::Arrow => "`->`",
            Tok::DColon => "`::`",
            Tok::Colon => "`:`",
            Tok::Bar => "`|`",
            Tok::LParen => "`(`",
            Tok::RParen => "`)`",
            Tok::LBrack => "`[`",
            Tok::RBrack => "`]`",
            Tok::LBrace => "`{`",
            Tok::RBrace => "`}`",
            Tok::Letrec => "`letrec`",
            Tok::In => "`in`",
            Tok::Case => "`case`",
            Tok::Of => "`of`",
            Tok::Seq => "`seq`",
            Tok::Data => "`data`",
            Tok::Eof => "end of input",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Copy, Debug)]
struct Pos {
    line: usize,
    col: usize,
}

const SYMBOL_CHARS: &str = "!#$%&*+/<=>?@^|-~:.";

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(src: &str) -> Result<Vec<(Tok, Pos)>, ParseError> {
    let chars: Vec<char> = src.chars().collect();
    let mut toks = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, col };
        let start = i;
        if c == '\n' {
            i += 1;
            line += 1;
            col = 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'-') {
            while i < chars.len() && chars[i] != '\n' {
                i += 1;
            }
            continue;
        }
        let tok = if c.is_ascii_digit() {
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n = text.parse().map_err(|_| ParseError {
                line,
                col,
                kind: ParseErrorKind::Lexical(c),
            })?;
            Tok::Int(n)
        } else if c == '\\' || c == 'λ' {
            i += 1;
            Tok::Backslash
        } else if c.is_alphabetic() || c == '_' {
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            match text.as_str() {
                "letrec" | "let" => Tok::Letrec,
                "in" => Tok::In,
                "case" => Tok::Case,
                "of" => Tok::Of,
                "seq" => Tok::Seq,
                "data" => Tok::Data,
                _ if c.is_uppercase() => Tok::Con(text),
                _ => Tok::Ident(text),
            }
        } else if c == '/' && chars.get(i + 1) == Some(&'\\') {
            i += 2;
            Tok::TyLam
        } else if SYMBOL_CHARS.contains(c) {
            while i < chars.len() && SYMBOL_CHARS.contains(chars[i]) {
                // a lone `.` directly after an operator is the lambda dot
                if chars[i] == '.' && i > start {
                    break;
                }
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            match text.as_str() {
                "." => Tok::Dot,
                "=" => Tok::Eq,
                "->" => Tok::Arrow,
                "::" => Tok::DColon,
                ":" => Tok::Colon,
                "|" => Tok::Bar,
                _ => Tok::Op(text),
            }
        } else {
            i += 1;
            match c {
                ',' => Tok::Comma,
                ';' => Tok::Semi,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBrack,
                ']' => Tok::RBrack,
                '{' => Tok::LBrace,
                '}' => Tok::RBrace,
                _ => {
                    return Err(ParseError {
                        line,
                        col,
                        kind: ParseErrorKind::Lexical(c),
                    })
                }
            }
        };
        col += i - start;
        toks.push((tok, pos));
    }
    toks.push((Tok::Eof, Pos { line, col }));
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser

struct Parser {
    toks: Vec<(Tok, Pos)>,
    pos: usize,
    env: DataEnv,
}

type PResult<T> = Result<T, ParseError>;

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, k: usize) -> &Tok {
        let i = (self.pos + k).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn here(&self) -> Pos {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err_at(&self, pos: Pos, kind: ParseErrorKind) -> ParseError {
        ParseError {
            line: pos.line,
            col: pos.col,
            kind,
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        self.err_at(
            self.here(),
            ParseErrorKind::Unexpected {
                expected: expected.to_string(),
                found: self.peek().to_string(),
            },
        )
    }

    fn expect(&mut self, tok: Tok) -> PResult<()> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            Err(self.unexpected(&tok.to_string()))
        }
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn ident(&mut self) -> PResult<Name> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Name::from(s))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    /// Binder in a definition or letrec: an identifier or `(op)`.
    fn binder(&mut self) -> PResult<Name> {
        if *self.peek() == Tok::LParen {
            if let (Tok::Op(op), Tok::RParen) = (self.peek_at(1).clone(), self.peek_at(2)) {
                self.pos += 3;
                return Ok(Name::from(op));
            }
        }
        self.ident()
    }

    /// True when the upcoming tokens start a new `name =` definition.
    fn at_definition_start(&self) -> bool {
        match self.peek() {
            Tok::Ident(_) => matches!(self.peek_at(1), Tok::Eq | Tok::DColon),
            Tok::LParen => {
                matches!(self.peek_at(1), Tok::Op(_))
                    && *self.peek_at(2) == Tok::RParen
                    && *self.peek_at(3) == Tok::Eq
            }
            _ => false,
        }
    }

    /// Skips a type up to (not including) the first depth-0 token in `stop`.
    fn skip_type(&mut self, stop: &[Tok]) {
        let mut depth = 0usize;
        loop {
            let t = self.peek();
            if *t == Tok::Eof {
                return;
            }
            if depth == 0 && stop.contains(t) {
                return;
            }
            match t {
                Tok::LParen | Tok::LBrack | Tok::LBrace => depth += 1,
                Tok::RParen | Tok::RBrack | Tok::RBrace => {
                    if depth == 0 {
                        return;
                    }
                    depth -= 1;
                }
                _ => {}
            }
            self.bump();
        }
    }

    // -- declarations -------------------------------------------------------

    fn data_decl(&mut self) -> PResult<DataDecl> {
        self.expect(Tok::Data)?;
        let tycon = match self.bump() {
            Tok::Con(s) => Name::from(s),
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("type constructor"));
            }
        };
        while let Tok::Ident(_) = self.peek() {
            self.bump();
        }
        self.expect(Tok::Eq)?;
        let mut cons = Vec::new();
        loop {
            let name = match self.peek().clone() {
                Tok::Con(s) => {
                    self.bump();
                    Name::from(s)
                }
                _ => return Err(self.unexpected("data constructor")),
            };
            let mut arity = 0;
            loop {
                match self.peek() {
                    Tok::Ident(_) if *self.peek_at(1) != Tok::Eq && *self.peek_at(1) != Tok::DColon => {
                        self.bump();
                    }
                    Tok::Con(_) => {
                        self.bump();
                    }
                    Tok::LParen | Tok::LBrack => {
                        let close = if *self.peek() == Tok::LParen {
                            Tok::RParen
                        } else {
                            Tok::RBrack
                        };
                        self.bump();
                        self.skip_type(&[]);
                        self.expect(close)?;
                    }
                    _ => break,
                }
                arity += 1;
            }
            cons.push(ConSig { name, arity });
            if !self.eat(&Tok::Bar) {
                break;
            }
        }
        self.eat(&Tok::Semi);
        Ok(DataDecl { tycon, cons })
    }

    // -- expressions --------------------------------------------------------

    fn expr(&mut self) -> PResult<Expr> {
        let e = match self.peek() {
            Tok::Backslash => self.lambda()?,
            Tok::TyLam => {
                self.bump();
                self.ident()?;
                self.expect(Tok::Dot)?;
                self.expr()?
            }
            Tok::Letrec => self.letrec()?,
            Tok::Case => self.case()?,
            _ => self.op_expr()?,
        };
        if self.eat(&Tok::DColon) {
            self.skip_type(&[
                Tok::Semi,
                Tok::Comma,
                Tok::In,
                Tok::Of,
                Tok::Eq,
                Tok::Bar,
            ]);
        }
        Ok(e)
    }

    fn lambda(&mut self) -> PResult<Expr> {
        self.expect(Tok::Backslash)?;
        let mut params = vec![self.ident()?];
        loop {
            if self.eat(&Tok::DColon) {
                self.skip_type(&[Tok::Dot, Tok::Comma]);
            }
            if self.eat(&Tok::Comma) {
                params.push(self.ident()?);
                continue;
            }
            if let Tok::Ident(_) = self.peek() {
                params.push(self.ident()?);
                continue;
            }
            break;
        }
        if !self.eat(&Tok::Arrow) {
            self.expect(Tok::Dot)?;
        }
        let mut body = self.expr()?;
        for p in params.into_iter().rev() {
            body = Expr::Lam(p, Box::new(body));
        }
        Ok(body)
    }

    fn letrec(&mut self) -> PResult<Expr> {
        self.expect(Tok::Letrec)?;
        let mut binds: Vec<Binding> = Vec::new();
        let mut seen = HashSet::new();
        loop {
            let at = self.here();
            let name = self.binder()?;
            if !seen.insert(name.clone()) {
                return Err(self.err_at(at, ParseErrorKind::DuplicateBinder(name.to_string())));
            }
            if self.eat(&Tok::DColon) {
                self.skip_type(&[Tok::Eq]);
            }
            self.expect(Tok::Eq)?;
            let rhs = self.expr()?;
            binds.push((name, rhs));
            if self.eat(&Tok::Semi) || self.eat(&Tok::Comma) {
                if *self.peek() == Tok::In {
                    break;
                }
                continue;
            }
            break;
        }
        self.expect(Tok::In)?;
        let body = self.expr()?;
        Ok(Expr::LetRec(binds, Box::new(body)))
    }

    fn case(&mut self) -> PResult<Expr> {
        let at = self.here();
        self.expect(Tok::Case)?;
        let scrut = self.expr()?;
        self.expect(Tok::Of)?;
        self.expect(Tok::LBrace)?;
        let mut alts: Vec<(Pos, Alt)> = Vec::new();
        while *self.peek() != Tok::RBrace {
            alts.push(self.alt()?);
            self.eat(&Tok::Semi);
        }
        self.expect(Tok::RBrace)?;
        let Some((_, first)) = alts.first() else {
            return Err(self.err_at(
                at,
                ParseErrorKind::Unexpected {
                    expected: "case alternative".into(),
                    found: "`}`".into(),
                },
            ));
        };
        let tycon = self.env.tycon_of(&first.con).cloned().expect("checked in alt");
        let sigs = self.env.constructors(&tycon).unwrap().to_vec();
        let mut slots: Vec<Option<Alt>> = vec![None; sigs.len()];
        for (p, alt) in alts {
            let Some(idx) = sigs.iter().position(|s| s.name == alt.con) else {
                return Err(self.err_at(
                    p,
                    ParseErrorKind::ForeignAlternative {
                        con: alt.con.to_string(),
                        tycon: tycon.to_string(),
                    },
                ));
            };
            if slots[idx].is_some() {
                return Err(self.err_at(p, ParseErrorKind::DuplicateAlternative(alt.con.to_string())));
            }
            slots[idx] = Some(alt);
        }
        let mut out = Vec::with_capacity(slots.len());
        for (slot, sig) in slots.into_iter().zip(&sigs) {
            match slot {
                Some(a) => out.push(a),
                None => {
                    return Err(self.err_at(at, ParseErrorKind::MissingAlternative(sig.name.to_string())))
                }
            }
        }
        Ok(Expr::Case(tycon, Box::new(scrut), out))
    }

    fn alt(&mut self) -> PResult<(Pos, Alt)> {
        let at = self.here();
        // `(pat -> e)` written with the whole alternative in parentheses
        if *self.peek() == Tok::LParen {
            let save = self.pos;
            self.bump();
            if let Ok((con, binders)) = self.pattern() {
                if self.eat(&Tok::Arrow) {
                    let rhs = self.expr()?;
                    self.expect(Tok::RParen)?;
                    return Ok((at, Alt { con, binders, rhs }));
                }
            }
            self.pos = save;
        }
        let (con, binders) = self.pattern()?;
        self.expect(Tok::Arrow)?;
        let rhs = self.expr()?;
        Ok((at, Alt { con, binders, rhs }))
    }

    fn pattern(&mut self) -> PResult<(Name, Vec<Name>)> {
        let at = self.here();
        let (con, binders) = match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let p = self.pattern()?;
                self.expect(Tok::RParen)?;
                return Ok(p);
            }
            Tok::LBrack => {
                self.bump();
                self.expect(Tok::RBrack)?;
                (Name::new("Nil"), Vec::new())
            }
            Tok::Int(0) => {
                self.bump();
                (Name::new("Zero"), Vec::new())
            }
            Tok::Ident(_) => {
                let head = self.ident()?;
                self.expect(Tok::Colon)?;
                let tl = self.ident()?;
                (Name::new("Cons"), vec![head, tl])
            }
            Tok::Con(c) => {
                self.bump();
                let mut binders = Vec::new();
                while let Tok::Ident(_) = self.peek() {
                    binders.push(self.ident()?);
                    if self.eat(&Tok::DColon) {
                        self.skip_type(&[Tok::Arrow, Tok::RParen]);
                    }
                }
                (Name::from(c), binders)
            }
            _ => return Err(self.unexpected("pattern")),
        };
        let Some(arity) = self.env.arity(&con) else {
            return Err(self.err_at(at, ParseErrorKind::UnknownConstructor(con.to_string())));
        };
        if arity != binders.len() {
            return Err(self.err_at(
                at,
                ParseErrorKind::Arity {
                    con: con.to_string(),
                    expected: arity,
                    got: binders.len(),
                },
            ));
        }
        let mut seen = HashSet::new();
        for b in &binders {
            if !seen.insert(b) {
                return Err(self.err_at(at, ParseErrorKind::DuplicateBinder(b.to_string())));
            }
        }
        Ok((con, binders))
    }

    fn op_expr(&mut self) -> PResult<Expr> {
        let lhs = self.app_expr()?;
        match self.peek().clone() {
            Tok::Colon => {
                self.bump();
                let rhs = self.expr()?;
                Ok(Expr::Con(Name::new("Cons"), vec![lhs, rhs]))
            }
            Tok::Op(op) => {
                self.bump();
                let rhs = self.expr()?;
                Ok(Expr::app(Expr::app(Expr::Var(Name::from(op)), lhs), rhs))
            }
            _ => Ok(lhs),
        }
    }

    fn starts_atom(&self) -> bool {
        match self.peek() {
            Tok::Ident(_) => !self.at_definition_start(),
            Tok::LParen => !self.at_definition_start(),
            Tok::Con(_) | Tok::Int(_) | Tok::LBrack => true,
            _ => false,
        }
    }

    fn app_expr(&mut self) -> PResult<Expr> {
        let at = self.here();
        let mut head = match self.peek().clone() {
            Tok::Seq => {
                self.bump();
                let a = self.atom()?;
                let b = self.atom()?;
                Expr::seq(a, b)
            }
            Tok::Con(c) => {
                self.bump();
                let con = Name::from(c);
                let arity = self.con_arity(&con, at)?;
                let mut args = Vec::new();
                while args.len() < arity && self.starts_atom() {
                    args.push(self.atom()?);
                }
                if args.len() != arity || (arity == 0 && self.starts_atom()) {
                    let mut got = args.len();
                    while self.starts_atom() {
                        self.atom()?;
                        got += 1;
                    }
                    return Err(self.err_at(
                        at,
                        ParseErrorKind::Arity {
                            con: con.to_string(),
                            expected: arity,
                            got,
                        },
                    ));
                }
                Expr::Con(con, args)
            }
            _ => self.atom()?,
        };
        while self.starts_atom() {
            let arg = self.atom()?;
            head = Expr::app(head, arg);
        }
        Ok(head)
    }

    fn con_arity(&self, con: &Name, at: Pos) -> PResult<usize> {
        self.env
            .arity(con)
            .ok_or_else(|| self.err_at(at, ParseErrorKind::UnknownConstructor(con.to_string())))
    }

    fn atom(&mut self) -> PResult<Expr> {
        let at = self.here();
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(Expr::Var(Name::from(s)))
            }
            Tok::Con(c) => {
                self.bump();
                let con = Name::from(c);
                let arity = self.con_arity(&con, at)?;
                if arity != 0 {
                    return Err(self.err_at(
                        at,
                        ParseErrorKind::Arity {
                            con: con.to_string(),
                            expected: arity,
                            got: 0,
                        },
                    ));
                }
                Ok(Expr::Con(con, Vec::new()))
            }
            Tok::Int(n) => {
                self.bump();
                Ok(Expr::peano(n))
            }
            Tok::LParen => {
                self.bump();
                if let (Tok::Op(op), Tok::RParen) = (self.peek().clone(), self.peek_at(1)) {
                    self.pos += 2;
                    return Ok(Expr::Var(Name::from(op)));
                }
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::LBrack => {
                self.bump();
                let mut items = Vec::new();
                if *self.peek() != Tok::RBrack {
                    items.push(self.expr()?);
                    while self.eat(&Tok::Comma) {
                        items.push(self.expr()?);
                    }
                }
                self.expect(Tok::RBrack)?;
                let mut list = Expr::con("Nil", vec![]);
                for item in items.into_iter().rev() {
                    list = Expr::con("Cons", vec![item, list]);
                }
                Ok(list)
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    // -- programs -----------------------------------------------------------

    /// Registers every data declaration before any expression is parsed.
    fn prescan_data(&mut self) -> PResult<Vec<DataDecl>> {
        let mut decls = Vec::new();
        let mut i = 0;
        while i < self.toks.len() {
            if self.toks[i].0 == Tok::Data {
                self.pos = i;
                let at = self.here();
                let d = self.data_decl()?;
                self.env
                    .declare(d.clone())
                    .map_err(|m| self.err_at(at, ParseErrorKind::Declaration(m)))?;
                decls.push(d);
                i = self.pos;
            } else {
                i += 1;
            }
        }
        self.pos = 0;
        Ok(decls)
    }

    fn definitions(&mut self, allow_main: bool) -> PResult<(Vec<Binding>, Option<Expr>)> {
        let mut defs: Vec<Binding> = Vec::new();
        let mut seen = HashSet::new();
        let mut main = None;
        loop {
            match self.peek() {
                Tok::Eof => break,
                Tok::Data => {
                    self.data_decl()?;
                    continue;
                }
                Tok::Semi => {
                    self.bump();
                    continue;
                }
                _ => {}
            }
            let at = self.here();
            if main.is_some() {
                return Err(self.err_at(at, ParseErrorKind::MainNotLast));
            }
            let name = self.binder()?;
            if self.eat(&Tok::DColon) {
                self.skip_type(&[Tok::Eq, Tok::Semi]);
                if self.eat(&Tok::Semi) {
                    // standalone signature
                    continue;
                }
            }
            self.expect(Tok::Eq)?;
            let rhs = self.expr()?;
            if self.peek() != &Tok::Eof && !self.at_definition_start() && *self.peek() != Tok::Data {
                self.expect(Tok::Semi)?;
            }
            if allow_main && name.as_str() == "main" {
                main = Some(rhs);
                continue;
            }
            if !seen.insert(name.clone()) {
                return Err(self.err_at(at, ParseErrorKind::DuplicateBinder(name.to_string())));
            }
            defs.push((name, rhs));
        }
        Ok((defs, main))
    }
}

fn parser_for(text: &str, env: DataEnv) -> PResult<Parser> {
    Ok(Parser {
        toks: lex(text)?,
        pos: 0,
        env,
    })
}

/// Parses a whole program. Data declarations may appear anywhere; `main`
/// must be the last definition.
pub fn parse_program(text: &str) -> Result<Program, ParseError> {
    let mut p = parser_for(text, DataEnv::builtin())?;
    let data_decls = p.prescan_data()?;
    let (defs, main) = p.definitions(true)?;
    let main = main.ok_or_else(|| p.err_at(p.here(), ParseErrorKind::MissingMain))?;
    Ok(Program {
        data_decls,
        defs,
        main,
        env: p.env,
    })
}

/// Parses a sequence of definitions without `main` (a library file).
pub fn parse_definitions(text: &str, env: &DataEnv) -> Result<Vec<Binding>, ParseError> {
    let mut p = parser_for(text, env.clone())?;
    p.prescan_data()?;
    let (defs, main) = p.definitions(false)?;
    debug_assert!(main.is_none());
    Ok(defs)
}

/// Parses a single expression over the built-in data types.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    parse_expr_with(text, &DataEnv::builtin())
}

pub fn parse_expr_with(text: &str, env: &DataEnv) -> Result<Expr, ParseError> {
    let mut p = parser_for(text, env.clone())?;
    let e = p.expr()?;
    if *p.peek() != Tok::Eof {
        return Err(p.unexpected("end of input"));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lambda() {
        assert_eq!(parse_expr("\\x.x").unwrap(), Expr::lam("x", Expr::var("x")));
        assert_eq!(
            parse_expr("\\x,y.x").unwrap(),
            Expr::lam("x", Expr::lam("y", Expr::var("x")))
        );
    }

    #[test]
    fn letrec() {
        assert_eq!(
            parse_expr("letrec x = True in x").unwrap(),
            Expr::letrec(vec![("x", Expr::con("True", vec![]))], Expr::var("x"))
        );
    }

    #[test]
    fn case_alternatives() {
        let e = parse_expr("case xs of { Nil -> z; Cons y ys -> y }").unwrap();
        assert_eq!(
            e,
            Expr::Case(
                Name::new("List"),
                Box::new(Expr::var("xs")),
                vec![
                    Alt::new("Nil", &[], Expr::var("z")),
                    Alt::new("Cons", &["y", "ys"], Expr::var("y")),
                ]
            )
        );
        let sugared = parse_expr("case xs of { (y:ys) -> y; [] -> z }").unwrap();
        assert_eq!(e, sugared);
        let paren_alts = parse_expr("case xs of { ([] -> z) ((y:ys) -> y) }").unwrap();
        assert_eq!(e, paren_alts);
    }

    #[test]
    fn lists_numbers_operators() {
        let e = parse_expr("[True, False]").unwrap();
        assert_eq!(e, parse_expr("True : False : []").unwrap());
        assert_eq!(parse_expr("2").unwrap(), Expr::peano(2));
        let app = parse_expr("xs ++ ys").unwrap();
        assert_eq!(
            app,
            Expr::app(Expr::app(Expr::var("++"), Expr::var("xs")), Expr::var("ys"))
        );
        assert_eq!(parse_expr("(++) xs ys").unwrap(), app);
    }

    #[test]
    fn types_are_discarded() {
        let e = parse_expr("/\\a. \\x :: a. (x :: a)").unwrap();
        assert_eq!(e, Expr::lam("x", Expr::var("x")));
        let e = parse_expr("letrec x :: Bool = True in x").unwrap();
        assert_eq!(e, parse_expr("letrec x = True in x").unwrap());
    }

    #[test]
    fn errors_carry_positions() {
        let err = parse_expr("case b of { True -> x }").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingAlternative("False".into()));
        assert_eq!((err.line, err.col), (1, 1));
        let err = parse_expr("\n  Foo").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::UnknownConstructor("Foo".into()));
        assert_eq!((err.line, err.col), (2, 3));
        let err = parse_expr("Cons x").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Arity { expected: 2, got: 1, .. }));
        let err = parse_expr("letrec x = True; x = False in x").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::DuplicateBinder("x".into()));
        let err = parse_expr("x # $").unwrap_err();
        assert!(matches!(err.kind, ParseErrorKind::Unexpected { .. }));
        let err = parse_expr("x ` y").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::Lexical('`'));
    }

    #[test]
    fn programs_with_data() {
        let src = "-- a comment\n\
                   data Tree a = Leaf | Node (Tree a) a (Tree a);\n\
                   size = \\t. case t of { Leaf -> Zero; Node l x r -> Succ (size l) }\n\
                   main = size (Node Leaf True Leaf)";
        let p = parse_program(src).unwrap();
        assert_eq!(p.data_decls.len(), 1);
        assert_eq!(p.env.arity(&Name::new("Node")), Some(3));
        assert_eq!(p.defs.len(), 1);
        let again = parse_program(&p.to_string()).unwrap();
        assert_eq!(again.defs, p.defs);
        assert_eq!(again.main, p.main);
    }

    #[test]
    fn main_must_be_last() {
        let err = parse_program("main = True; f = False;").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MainNotLast);
        let err = parse_program("f = True;").unwrap_err();
        assert_eq!(err.kind, ParseErrorKind::MissingMain);
    }
}
