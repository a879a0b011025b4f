//! Syntax of the extended spatial mu-calculus.
//!
//! Formulas are kept in negation normal form: negation only ever sits on an
//! atom, and every connective has its dual as a primitive. The concrete
//! syntax accepted by [`parse`] is ASCII:
//!
//! ```text
//! T  F  p  ~p  f & g  f | g  <> f  [] f  <+> f  [+] f  A f  E f
//! mu x . f   nu x . f   <*>{f, g, ...}   [*]{f, g, ...}   !f   f -> g
//! ```
//!
//! Prefix operators bind tighter than `&`, which binds tighter than `|`,
//! which binds tighter than `->` (right associative). Binders extend as far
//! to the right as possible. `!` and `->` are sugar and are eliminated while
//! parsing, so they never appear in a [`Formula`].

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

/// A formula in negation normal form.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Formula {
    Top,
    Bot,
    Atom(String),
    NegAtom(String),
    And(Box<Formula>, Box<Formula>),
    Or(Box<Formula>, Box<Formula>),
    /// `<> f`: some successor satisfies `f`.
    Dia(Box<Formula>),
    /// `[] f`: every successor satisfies `f`.
    Box(Box<Formula>),
    /// `<+> f`: closure, `f | <> f`.
    DiaPlus(Box<Formula>),
    /// `[+] f`: interior, `f & [] f`.
    BoxPlus(Box<Formula>),
    Forall(Box<Formula>),
    Exists(Box<Formula>),
    Mu(String, Box<Formula>),
    Nu(String, Box<Formula>),
    /// `<*>{f1, ..., fn}`; the list is never empty.
    TangleDia(Vec<Formula>),
    /// `[*]{f1, ..., fn}`; the list is never empty.
    TangleBox(Vec<Formula>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormulaError {
    #[error("syntax error at offset {position}: expected {expected}")]
    Syntax { position: usize, expected: String },
    #[error("bound variable `{0}` occurs negated inside its binder")]
    Positivity(String),
}

impl Formula {
    pub fn atom(name: impl Into<String>) -> Self {
        Formula::Atom(name.into())
    }

    pub fn neg_atom(name: impl Into<String>) -> Self {
        Formula::NegAtom(name.into())
    }

    pub fn and(l: Formula, r: Formula) -> Self {
        Formula::And(Box::new(l), Box::new(r))
    }

    pub fn or(l: Formula, r: Formula) -> Self {
        Formula::Or(Box::new(l), Box::new(r))
    }

    pub fn dia(f: Formula) -> Self {
        Formula::Dia(Box::new(f))
    }

    pub fn boxed(f: Formula) -> Self {
        Formula::Box(Box::new(f))
    }

    pub fn dia_plus(f: Formula) -> Self {
        Formula::DiaPlus(Box::new(f))
    }

    pub fn box_plus(f: Formula) -> Self {
        Formula::BoxPlus(Box::new(f))
    }

    pub fn forall(f: Formula) -> Self {
        Formula::Forall(Box::new(f))
    }

    pub fn exists(f: Formula) -> Self {
        Formula::Exists(Box::new(f))
    }

    pub fn mu(var: impl Into<String>, body: Formula) -> Self {
        Formula::Mu(var.into(), Box::new(body))
    }

    pub fn nu(var: impl Into<String>, body: Formula) -> Self {
        Formula::Nu(var.into(), Box::new(body))
    }

    /// Conjunction of a nonempty list, associated to the left. `T` when empty.
    pub fn conj(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts
            .into_iter()
            .reduce(Formula::and)
            .unwrap_or(Formula::Top)
    }

    /// Disjunction of a list, associated to the left. `F` when empty.
    pub fn disj(parts: impl IntoIterator<Item = Formula>) -> Self {
        parts
            .into_iter()
            .reduce(Formula::or)
            .unwrap_or(Formula::Bot)
    }

    /// Number of nodes in the syntax tree. A tangle counts one node plus the
    /// sizes of all of its arguments.
    pub fn size(&self) -> usize {
        match self {
            Formula::Top | Formula::Bot | Formula::Atom(_) | Formula::NegAtom(_) => 1,
            Formula::And(l, r) | Formula::Or(l, r) => 1 + l.size() + r.size(),
            Formula::Dia(f)
            | Formula::Box(f)
            | Formula::DiaPlus(f)
            | Formula::BoxPlus(f)
            | Formula::Forall(f)
            | Formula::Exists(f)
            | Formula::Mu(_, f)
            | Formula::Nu(_, f) => 1 + f.size(),
            Formula::TangleDia(fs) | Formula::TangleBox(fs) => {
                1 + fs.iter().map(Formula::size).sum::<usize>()
            }
        }
    }

    /// Semantic negation, pushed down to the atoms.
    pub fn dual(&self) -> Formula {
        self.dual_with(&mut Vec::new())
    }

    // `flipped` holds variables bound by a binder that has already been
    // dualized; their occurrences keep their polarity.
    fn dual_with(&self, flipped: &mut Vec<String>) -> Formula {
        let is_flipped = |p: &str, flipped: &[String]| flipped.iter().any(|q| q == p);
        match self {
            Formula::Top => Formula::Bot,
            Formula::Bot => Formula::Top,
            Formula::Atom(p) if is_flipped(p, flipped) => Formula::Atom(p.clone()),
            Formula::NegAtom(p) if is_flipped(p, flipped) => Formula::NegAtom(p.clone()),
            Formula::Atom(p) => Formula::NegAtom(p.clone()),
            Formula::NegAtom(p) => Formula::Atom(p.clone()),
            Formula::And(l, r) => Formula::or(l.dual_with(flipped), r.dual_with(flipped)),
            Formula::Or(l, r) => Formula::and(l.dual_with(flipped), r.dual_with(flipped)),
            Formula::Dia(f) => Formula::boxed(f.dual_with(flipped)),
            Formula::Box(f) => Formula::dia(f.dual_with(flipped)),
            Formula::DiaPlus(f) => Formula::box_plus(f.dual_with(flipped)),
            Formula::BoxPlus(f) => Formula::dia_plus(f.dual_with(flipped)),
            Formula::Forall(f) => Formula::exists(f.dual_with(flipped)),
            Formula::Exists(f) => Formula::forall(f.dual_with(flipped)),
            Formula::Mu(p, f) | Formula::Nu(p, f) => {
                flipped.push(p.clone());
                let body = f.dual_with(flipped);
                flipped.pop();
                if matches!(self, Formula::Mu(..)) {
                    Formula::nu(p.clone(), body)
                } else {
                    Formula::mu(p.clone(), body)
                }
            }
            Formula::TangleDia(fs) => {
                Formula::TangleBox(fs.iter().map(|f| f.dual_with(flipped)).collect())
            }
            Formula::TangleBox(fs) => {
                Formula::TangleDia(fs.iter().map(|f| f.dual_with(flipped)).collect())
            }
        }
    }

    /// Atoms occurring outside the scope of a binder for them.
    pub fn free_atoms(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_free(&mut Vec::new(), &mut out);
        out
    }

    fn collect_free(&self, bound: &mut Vec<String>, out: &mut BTreeSet<String>) {
        match self {
            Formula::Top | Formula::Bot => {}
            Formula::Atom(p) | Formula::NegAtom(p) => {
                if !bound.iter().any(|q| q == p) {
                    out.insert(p.clone());
                }
            }
            Formula::Mu(p, f) | Formula::Nu(p, f) => {
                bound.push(p.clone());
                f.collect_free(bound, out);
                bound.pop();
            }
            _ => self.children().for_each(|c| c.collect_free(bound, out)),
        }
    }

    /// Every name used anywhere in the formula, bound or free.
    pub fn all_names(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.walk(&mut |f| match f {
            Formula::Atom(p) | Formula::NegAtom(p) | Formula::Mu(p, _) | Formula::Nu(p, _) => {
                out.insert(p.clone());
            }
            _ => {}
        });
        out
    }

    /// Immediate subformulas, left to right.
    pub fn children(&self) -> Box<dyn Iterator<Item = &Formula> + '_> {
        match self {
            Formula::Top | Formula::Bot | Formula::Atom(_) | Formula::NegAtom(_) => {
                Box::new(std::iter::empty())
            }
            Formula::And(l, r) | Formula::Or(l, r) => {
                Box::new([l.as_ref(), r.as_ref()].into_iter())
            }
            Formula::Dia(f)
            | Formula::Box(f)
            | Formula::DiaPlus(f)
            | Formula::BoxPlus(f)
            | Formula::Forall(f)
            | Formula::Exists(f)
            | Formula::Mu(_, f)
            | Formula::Nu(_, f) => Box::new(std::iter::once(f.as_ref())),
            Formula::TangleDia(fs) | Formula::TangleBox(fs) => Box::new(fs.iter()),
        }
    }

    /// Pre-order traversal.
    pub fn walk<'a>(&'a self, visit: &mut impl FnMut(&'a Formula)) {
        visit(self);
        for c in self.children() {
            c.walk(visit);
        }
    }

    pub fn any(&self, pred: &impl Fn(&Formula) -> bool) -> bool {
        pred(self) || self.children().any(|c| c.any(pred))
    }

    pub fn has_fixpoints(&self) -> bool {
        self.any(&|f| matches!(f, Formula::Mu(..) | Formula::Nu(..)))
    }

    pub fn has_tangles(&self) -> bool {
        self.any(&|f| matches!(f, Formula::TangleDia(_) | Formula::TangleBox(_)))
    }

    pub fn has_closure(&self) -> bool {
        self.any(&|f| matches!(f, Formula::DiaPlus(_) | Formula::BoxPlus(_)))
    }

    pub fn has_universal(&self) -> bool {
        self.any(&|f| matches!(f, Formula::Forall(_) | Formula::Exists(_)))
    }

    /// Checks that no binder's body contains its variable negated.
    pub fn check_positivity(&self) -> Result<(), FormulaError> {
        match self {
            Formula::Mu(p, body) | Formula::Nu(p, body) => {
                if body.occurs_negated_free(p) {
                    return Err(FormulaError::Positivity(p.clone()));
                }
                body.check_positivity()
            }
            _ => self.children().try_for_each(Formula::check_positivity),
        }
    }

    fn occurs_negated_free(&self, var: &str) -> bool {
        match self {
            Formula::NegAtom(p) => p == var,
            Formula::Mu(p, _) | Formula::Nu(p, _) if p == var => false,
            _ => self.children().any(|c| c.occurs_negated_free(var)),
        }
    }

    /// Replaces free occurrences of the atom `var` with `with`.
    pub fn substitute(&self, var: &str, with: &Formula) -> Formula {
        self.map_free_atoms(var, &|positive| {
            if positive {
                with.clone()
            } else {
                with.dual()
            }
        })
    }

    fn map_free_atoms(&self, var: &str, f: &impl Fn(bool) -> Formula) -> Formula {
        match self {
            Formula::Atom(p) if p == var => f(true),
            Formula::NegAtom(p) if p == var => f(false),
            Formula::Mu(p, _) | Formula::Nu(p, _) if p == var => self.clone(),
            _ => self.map_children(|c| c.map_free_atoms(var, f)),
        }
    }

    /// Rebuilds the node with `g` applied to each immediate subformula.
    pub fn map_children(&self, mut g: impl FnMut(&Formula) -> Formula) -> Formula {
        match self {
            Formula::Top | Formula::Bot | Formula::Atom(_) | Formula::NegAtom(_) => self.clone(),
            Formula::And(l, r) => Formula::and(g(l), g(r)),
            Formula::Or(l, r) => Formula::or(g(l), g(r)),
            Formula::Dia(f) => Formula::dia(g(f)),
            Formula::Box(f) => Formula::boxed(g(f)),
            Formula::DiaPlus(f) => Formula::dia_plus(g(f)),
            Formula::BoxPlus(f) => Formula::box_plus(g(f)),
            Formula::Forall(f) => Formula::forall(g(f)),
            Formula::Exists(f) => Formula::exists(g(f)),
            Formula::Mu(p, f) => Formula::mu(p.clone(), g(f)),
            Formula::Nu(p, f) => Formula::nu(p.clone(), g(f)),
            Formula::TangleDia(fs) => Formula::TangleDia(fs.iter().map(g).collect()),
            Formula::TangleBox(fs) => Formula::TangleBox(fs.iter().map(g).collect()),
        }
    }
}

/// Generates variable names `v0`, `v1`, ... that avoid a given set of names.
#[derive(Debug, Clone)]
pub struct FreshVars {
    next: usize,
    taken: BTreeSet<String>,
}

impl FreshVars {
    pub fn avoiding(taken: BTreeSet<String>) -> Self {
        FreshVars { next: 0, taken }
    }

    pub fn for_formula(f: &Formula) -> Self {
        Self::avoiding(f.all_names())
    }

    pub fn fresh(&mut self) -> String {
        loop {
            let name = format!("v{}", self.next);
            self.next += 1;
            if !self.taken.contains(&name) {
                self.taken.insert(name.clone());
                return name;
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Printing

const PREC_OR: u8 = 1;
const PREC_AND: u8 = 2;
const PREC_PREFIX: u8 = 3;

impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        write_formula(self, PREC_OR, true, &mut out);
        f.write_str(&out)
    }
}

/// Canonical text: minimal parentheses under the fixed precedence, a space
/// after a prefix operator unless its operand is parenthesized.
pub fn print(f: &Formula) -> String {
    f.to_string()
}

fn precedence(f: &Formula) -> u8 {
    match f {
        Formula::Or(..) => PREC_OR,
        Formula::And(..) => PREC_AND,
        _ => PREC_PREFIX,
    }
}

// `rightmost` is false when more input follows this subformula at the same
// parenthesis depth; a binder must then be parenthesized, since its body
// would otherwise swallow what follows.
fn write_formula(f: &Formula, min_prec: u8, rightmost: bool, out: &mut String) {
    let is_binder = matches!(f, Formula::Mu(..) | Formula::Nu(..));
    if precedence(f) < min_prec || (is_binder && !rightmost) {
        out.push('(');
        write_bare(f, true, out);
        out.push(')');
    } else {
        write_bare(f, rightmost, out);
    }
}

fn write_prefix(op: &str, body: &Formula, rightmost: bool, out: &mut String) {
    out.push_str(op);
    let parenthesized = precedence(body) < PREC_PREFIX
        || (matches!(body, Formula::Mu(..) | Formula::Nu(..)) && !rightmost);
    if !parenthesized {
        out.push(' ');
    }
    write_formula(body, PREC_PREFIX, rightmost, out);
}

fn write_bare(f: &Formula, rightmost: bool, out: &mut String) {
    match f {
        Formula::Top => out.push('T'),
        Formula::Bot => out.push('F'),
        Formula::Atom(p) => out.push_str(p),
        Formula::NegAtom(p) => {
            out.push('~');
            out.push_str(p);
        }
        Formula::And(l, r) => {
            write_formula(l, PREC_AND, false, out);
            out.push_str(" & ");
            write_formula(r, PREC_PREFIX, rightmost, out);
        }
        Formula::Or(l, r) => {
            write_formula(l, PREC_OR, false, out);
            out.push_str(" | ");
            write_formula(r, PREC_AND, rightmost, out);
        }
        Formula::Dia(b) => write_prefix("<>", b, rightmost, out),
        Formula::Box(b) => write_prefix("[]", b, rightmost, out),
        Formula::DiaPlus(b) => write_prefix("<+>", b, rightmost, out),
        Formula::BoxPlus(b) => write_prefix("[+]", b, rightmost, out),
        Formula::Forall(b) => write_prefix("A", b, rightmost, out),
        Formula::Exists(b) => write_prefix("E", b, rightmost, out),
        Formula::Mu(p, b) | Formula::Nu(p, b) => {
            out.push_str(if matches!(f, Formula::Mu(..)) { "mu " } else { "nu " });
            out.push_str(p);
            out.push_str(" . ");
            write_formula(b, PREC_OR, true, out);
        }
        Formula::TangleDia(fs) | Formula::TangleBox(fs) => {
            out.push_str(if matches!(f, Formula::TangleDia(_)) { "<*>{" } else { "[*]{" });
            for (k, g) in fs.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_formula(g, PREC_OR, true, out);
            }
            out.push('}');
        }
    }
}

// ---------------------------------------------------------------------------
// Parsing

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Top,
    Bot,
    Ident(String),
    Tilde,
    Bang,
    Amp,
    Bar,
    Arrow,
    Dia,
    Box,
    DiaPlus,
    BoxPlus,
    DiaStar,
    BoxStar,
    Forall,
    Exists,
    Mu,
    Nu,
    Dot,
    Comma,
    LParen,
    RParen,
    LBrace,
    RBrace,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn tokens(src: &'a str) -> Result<Vec<(usize, Tok)>, FormulaError> {
        let mut lx = Lexer { src, pos: 0 };
        let mut out = Vec::new();
        loop {
            let (at, tok) = lx.next_tok()?;
            let end = tok == Tok::End;
            out.push((at, tok));
            if end {
                return Ok(out);
            }
        }
    }

    fn next_tok(&mut self) -> Result<(usize, Tok), FormulaError> {
        let rest = &self.src[self.pos..];
        let trimmed = rest.trim_start();
        self.pos += rest.len() - trimmed.len();
        let at = self.pos;
        const SYMBOLS: [(&str, Tok); 17] = [
            ("<+>", Tok::DiaPlus),
            ("[+]", Tok::BoxPlus),
            ("<*>", Tok::DiaStar),
            ("[*]", Tok::BoxStar),
            ("<>", Tok::Dia),
            ("[]", Tok::Box),
            ("->", Tok::Arrow),
            ("~", Tok::Tilde),
            ("!", Tok::Bang),
            ("&", Tok::Amp),
            ("|", Tok::Bar),
            (".", Tok::Dot),
            (",", Tok::Comma),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            ("{", Tok::LBrace),
            ("}", Tok::RBrace),
        ];
        if trimmed.is_empty() {
            return Ok((at, Tok::End));
        }
        for (sym, tok) in SYMBOLS.iter() {
            if trimmed.starts_with(sym) {
                self.pos += sym.len();
                return Ok((at, tok.clone()));
            }
        }
        let c = trimmed.chars().next().unwrap();
        if c.is_ascii_lowercase() {
            let len = trimmed
                .find(|ch: char| !(ch.is_ascii_alphanumeric() || ch == '_'))
                .unwrap_or(trimmed.len());
            let word = &trimmed[..len];
            self.pos += len;
            let tok = match word {
                "mu" => Tok::Mu,
                "nu" => Tok::Nu,
                _ => Tok::Ident(word.to_string()),
            };
            return Ok((at, tok));
        }
        let tok = match c {
            'T' => Tok::Top,
            'F' => Tok::Bot,
            'A' => Tok::Forall,
            'E' => Tok::Exists,
            _ => {
                return Err(FormulaError::Syntax {
                    position: at,
                    expected: "a formula token".into(),
                })
            }
        };
        self.pos += 1;
        Ok((at, tok))
    }
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.at].1
    }

    fn offset(&self) -> usize {
        self.toks[self.at].0
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.at].1.clone();
        if t != Tok::End {
            self.at += 1;
        }
        t
    }

    fn error<T>(&self, expected: &str) -> Result<T, FormulaError> {
        Err(FormulaError::Syntax {
            position: self.offset(),
            expected: expected.to_string(),
        })
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), FormulaError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.error(what)
        }
    }

    fn implication(&mut self) -> Result<Formula, FormulaError> {
        let lhs = self.disjunction()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.implication()?;
            return Ok(Formula::or(lhs.dual(), rhs));
        }
        Ok(lhs)
    }

    fn disjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.conjunction()?;
        while *self.peek() == Tok::Bar {
            self.bump();
            acc = Formula::or(acc, self.conjunction()?);
        }
        Ok(acc)
    }

    fn conjunction(&mut self) -> Result<Formula, FormulaError> {
        let mut acc = self.unary()?;
        while *self.peek() == Tok::Amp {
            self.bump();
            acc = Formula::and(acc, self.unary()?);
        }
        Ok(acc)
    }

    fn ident(&mut self) -> Result<String, FormulaError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.bump();
                Ok(name)
            }
            _ => self.error("an identifier"),
        }
    }

    fn unary(&mut self) -> Result<Formula, FormulaError> {
        let tok = self.peek().clone();
        match tok {
            Tok::Top => {
                self.bump();
                Ok(Formula::Top)
            }
            Tok::Bot => {
                self.bump();
                Ok(Formula::Bot)
            }
            Tok::Ident(name) => {
                self.bump();
                Ok(Formula::Atom(name))
            }
            Tok::Tilde => {
                self.bump();
                Ok(Formula::NegAtom(self.ident()?))
            }
            Tok::Bang => {
                self.bump();
                Ok(self.unary()?.dual())
            }
            Tok::Dia => {
                self.bump();
                Ok(Formula::dia(self.unary()?))
            }
            Tok::Box => {
                self.bump();
                Ok(Formula::boxed(self.unary()?))
            }
            Tok::DiaPlus => {
                self.bump();
                Ok(Formula::dia_plus(self.unary()?))
            }
            Tok::BoxPlus => {
                self.bump();
                Ok(Formula::box_plus(self.unary()?))
            }
            Tok::Forall => {
                self.bump();
                Ok(Formula::forall(self.unary()?))
            }
            Tok::Exists => {
                self.bump();
                Ok(Formula::exists(self.unary()?))
            }
            Tok::Mu | Tok::Nu => {
                self.bump();
                let var = self.ident()?;
                self.expect(Tok::Dot, "`.` after the bound variable")?;
                let body = self.implication()?;
                Ok(if tok == Tok::Mu {
                    Formula::mu(var, body)
                } else {
                    Formula::nu(var, body)
                })
            }
            Tok::DiaStar | Tok::BoxStar => {
                self.bump();
                self.expect(Tok::LBrace, "`{` opening the tangle arguments")?;
                let mut args = vec![self.implication()?];
                while *self.peek() == Tok::Comma {
                    self.bump();
                    args.push(self.implication()?);
                }
                self.expect(Tok::RBrace, "`,` or `}`")?;
                Ok(if tok == Tok::DiaStar {
                    Formula::TangleDia(args)
                } else {
                    Formula::TangleBox(args)
                })
            }
            Tok::LParen => {
                self.bump();
                let inner = self.implication()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(inner)
            }
            _ => self.error("a formula"),
        }
    }
}

/// Parses the ASCII concrete syntax into an NNF formula.
pub fn parse(text: &str) -> Result<Formula, FormulaError> {
    let toks = Lexer::tokens(text)?;
    let mut p = Parser { toks, at: 0 };
    let f = p.implication()?;
    if *p.peek() != Tok::End {
        return p.error("end of input");
    }
    f.check_positivity()?;
    Ok(f)
}

impl std::str::FromStr for Formula {
    type Err = FormulaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}
