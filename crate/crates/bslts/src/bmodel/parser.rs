//! Recursive-descent parser for component sources and predicate texts.
//!
//! The parser produces *unresolved* syntax: identifiers in expression
//! position stay [`Expr::Ident`] until the typechecker classifies them as
//! variables or enumerated-set elements.

use super::ast::{Expr, Pred, SetExpr, Subst};
use super::lexer::{lex, Span, Token, TokenKind};
use super::model::{Component, Event, RawComponent, RawRefinement};
use super::ParseError;

/// Keywords that open clauses or structure a component; they cannot be used
/// as variable, set, element or event names.
pub const KEYWORDS: &[&str] = &[
    "MACHINE",
    "REFINEMENT",
    "REFINES",
    "SETS",
    "VARIABLES",
    "INVARIANT",
    "VARIANT",
    "ASSERTIONS",
    "INITIALISATION",
    "EVENTS",
    "END",
    "BEGIN",
    "IF",
    "THEN",
    "ELSE",
    "SELECT",
    "WHEN",
    "CHOICE",
    "OR",
    "ANY",
    "WHERE",
    "skip",
    "not",
    "or",
    "true",
    "false",
    "bool",
];

/// Keywords that terminate a clause body when met at clause level.
const CLAUSE_BOUNDARY: &[&str] = &[
    "MACHINE",
    "REFINEMENT",
    "REFINES",
    "SETS",
    "VARIABLES",
    "INVARIANT",
    "VARIANT",
    "ASSERTIONS",
    "INITIALISATION",
    "EVENTS",
    "END",
];

/// Parses a full component source (a machine or a refinement).
pub fn parse_component(source: &str) -> Result<Component, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let component = p.component()?;
    p.expect_eof()?;
    Ok(component)
}

/// Parses a standalone predicate (as found in dumps and property files).
/// The result is unresolved; see [`super::SymbolTable::resolve_predicate`].
pub fn parse_predicate(source: &str) -> Result<Pred, ParseError> {
    let tokens = lex(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let pred = p.predicate()?;
    p.expect_eof()?;
    Ok(pred)
}

pub(crate) struct Parser {
    pub(crate) tokens: Vec<Token>,
    pub(crate) pos: usize,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Token>) -> Parser {
        Parser { tokens, pos: 0 }
    }

    fn peek(&self) -> Option<&TokenKind> {
        self.tokens.get(self.pos).map(|t| &t.kind)
    }

    fn peek_at(&self, offset: usize) -> Option<&TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| &t.kind)
    }

    pub(crate) fn span(&self) -> Span {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|t| t.span)
            .unwrap_or(Span { line: 1, col: 1 })
    }

    fn bump(&mut self) -> Option<TokenKind> {
        let t = self.tokens.get(self.pos).map(|t| t.kind.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn at(&self, kind: &TokenKind) -> bool {
        self.peek() == Some(kind)
    }

    pub(crate) fn at_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Some(TokenKind::Ident(n)) if n == kw)
    }

    fn at_clause_boundary(&self) -> bool {
        matches!(self.peek(), Some(TokenKind::Ident(n)) if CLAUSE_BOUNDARY.contains(&n.as_str()))
    }

    fn expect(&mut self, kind: TokenKind) -> Result<(), ParseError> {
        if self.at(&kind) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("{kind}")))
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.at_keyword(kw) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(&format!("`{kw}`")))
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        let (found, span) = match self.tokens.get(self.pos) {
            Some(t) => (format!("{}", t.kind), t.span),
            None => (
                "end of input".to_string(),
                self.tokens
                    .last()
                    .map(|t| t.span)
                    .unwrap_or(Span { line: 1, col: 1 }),
            ),
        };
        ParseError::Unexpected {
            expected: expected.to_string(),
            found,
            span,
        }
    }

    pub(crate) fn expect_eof(&self) -> Result<(), ParseError> {
        if self.pos == self.tokens.len() {
            Ok(())
        } else {
            Err(self.unexpected("end of input"))
        }
    }

    /// A non-keyword identifier (names of machines, sets, variables, events).
    fn name(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek() {
            Some(TokenKind::Ident(n)) if !KEYWORDS.contains(&n.as_str()) => {
                let n = n.clone();
                self.pos += 1;
                Ok(n)
            }
            Some(TokenKind::Ident(n)) if KEYWORDS.contains(&n.as_str()) => {
                Err(ParseError::ReservedWord {
                    word: n.clone(),
                    what: what.to_string(),
                    span: self.span(),
                })
            }
            _ => Err(self.unexpected(&format!("{what} name"))),
        }
    }

    // ------------------------------------------------------------------
    // Components
    // ------------------------------------------------------------------

    fn component(&mut self) -> Result<Component, ParseError> {
        if self.at_keyword("MACHINE") {
            self.pos += 1;
            let raw = self.component_body()?;
            let machine = super::typecheck::resolve_machine(raw)?;
            Ok(Component::Machine(machine))
        } else if self.at_keyword("REFINEMENT") {
            self.pos += 1;
            let name = self.name("refinement")?;
            self.expect_keyword("REFINES")?;
            let refines = self.name("machine")?;
            let raw = self.component_body_named(name)?;
            Ok(Component::Refinement(RawRefinement {
                refines,
                component: raw,
            }))
        } else {
            Err(self.unexpected("`MACHINE` or `REFINEMENT`"))
        }
    }

    fn component_body(&mut self) -> Result<RawComponent, ParseError> {
        let name = self.name("component")?;
        self.component_body_named(name)
    }

    fn component_body_named(&mut self, name: String) -> Result<RawComponent, ParseError> {
        let sets = if self.at_keyword("SETS") {
            self.pos += 1;
            self.set_declarations()?
        } else {
            Vec::new()
        };

        self.expect_keyword("VARIABLES")?;
        let mut variables = Vec::new();
        loop {
            variables.push(self.name("variable")?);
            if self.at(&TokenKind::Comma) {
                self.pos += 1;
                continue;
            }
            if matches!(self.peek(), Some(TokenKind::Ident(n)) if !CLAUSE_BOUNDARY.contains(&n.as_str()))
            {
                continue;
            }
            break;
        }

        self.expect_keyword("INVARIANT")?;
        let invariant = self.predicate()?;

        let variant = if self.at_keyword("VARIANT") {
            self.pos += 1;
            Some(self.expr()?)
        } else {
            None
        };

        let assertions = if self.at_keyword("ASSERTIONS") {
            self.pos += 1;
            Some(self.predicate()?)
        } else {
            None
        };

        self.expect_keyword("INITIALISATION")?;
        let initialisation = self.substitution()?;

        let mut events = Vec::new();
        if self.at_keyword("EVENTS") {
            self.pos += 1;
            loop {
                let ev_name = self.name("event")?;
                self.expect(TokenKind::Equal)?;
                let body = self.substitution()?;
                events.push(Event {
                    name: ev_name,
                    body,
                });
                if self.at(&TokenKind::Semicolon) {
                    // Either the next event or a trailing separator.
                    self.pos += 1;
                    if self.at_keyword("END") {
                        break;
                    }
                    continue;
                }
                break;
            }
        }

        self.expect_keyword("END")?;
        Ok(RawComponent {
            name,
            sets,
            variables,
            invariant,
            variant,
            assertions,
            initialisation,
            events,
        })
    }

    fn set_declarations(&mut self) -> Result<Vec<(String, Vec<String>)>, ParseError> {
        let mut sets = Vec::new();
        loop {
            let name = self.name("set")?;
            self.expect(TokenKind::Equal)?;
            self.expect(TokenKind::LBrace)?;
            let mut elements = Vec::new();
            loop {
                elements.push(self.name("set element")?);
                if self.at(&TokenKind::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            self.expect(TokenKind::RBrace)?;
            sets.push((name, elements));
            if self.at(&TokenKind::Semicolon) {
                // Continue only if another declaration follows.
                if matches!(self.peek_at(1), Some(TokenKind::Ident(n)) if !CLAUSE_BOUNDARY.contains(&n.as_str()))
                {
                    self.pos += 1;
                    continue;
                }
                self.pos += 1;
            }
            break;
        }
        Ok(sets)
    }

    // ------------------------------------------------------------------
    // Substitutions
    // ------------------------------------------------------------------

    /// Parses a substitution, treating `;` as sequential composition but
    /// stopping before `; <name> =` (the next event) and before clause
    /// keywords.
    pub(crate) fn substitution(&mut self) -> Result<Subst, ParseError> {
        let mut parts = vec![self.parallel_subst()?];
        while self.at(&TokenKind::Semicolon) {
            // Lookahead: a following `name =` starts the next event; a
            // clause keyword ends the enclosing clause.
            match self.peek_at(1) {
                Some(TokenKind::Ident(n)) if CLAUSE_BOUNDARY.contains(&n.as_str()) => break,
                Some(TokenKind::Ident(_)) if self.peek_at(2) == Some(&TokenKind::Equal) => break,
                _ => {}
            }
            self.pos += 1;
            parts.push(self.parallel_subst()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Subst::Sequence(parts)
        })
    }

    fn parallel_subst(&mut self) -> Result<Subst, ParseError> {
        let mut parts = vec![self.primary_subst()?];
        while self.at(&TokenKind::DoubleBar) {
            self.pos += 1;
            parts.push(self.primary_subst()?);
        }
        Ok(if parts.len() == 1 {
            parts.pop().unwrap()
        } else {
            Subst::Parallel(parts)
        })
    }

    fn primary_subst(&mut self) -> Result<Subst, ParseError> {
        if self.at_keyword("skip") {
            self.pos += 1;
            return Ok(Subst::Skip);
        }
        if self.at_keyword("BEGIN") {
            self.pos += 1;
            let inner = self.substitution()?;
            self.expect_keyword("END")?;
            return Ok(inner);
        }
        if self.at_keyword("IF") {
            self.pos += 1;
            let cond = self.predicate()?;
            self.expect_keyword("THEN")?;
            let then = self.substitution()?;
            let els = if self.at_keyword("ELSE") {
                self.pos += 1;
                self.substitution()?
            } else {
                Subst::Skip
            };
            self.expect_keyword("END")?;
            return Ok(Subst::If {
                cond,
                then: Box::new(then),
                els: Box::new(els),
            });
        }
        if self.at_keyword("SELECT") {
            self.pos += 1;
            let mut branches = Vec::new();
            let guard = self.predicate()?;
            self.expect_keyword("THEN")?;
            let body = self.substitution()?;
            branches.push((guard, body));
            while self.at_keyword("WHEN") {
                self.pos += 1;
                let guard = self.predicate()?;
                self.expect_keyword("THEN")?;
                let body = self.substitution()?;
                branches.push((guard, body));
            }
            self.expect_keyword("END")?;
            return Ok(Subst::Select(branches));
        }
        if self.at_keyword("CHOICE") {
            self.pos += 1;
            let mut arms = vec![self.substitution()?];
            while self.at_keyword("OR") {
                self.pos += 1;
                arms.push(self.substitution()?);
            }
            self.expect_keyword("END")?;
            return Ok(Subst::Choice(arms));
        }
        if self.at_keyword("ANY") {
            self.pos += 1;
            let var = self.name("bound variable")?;
            self.expect_keyword("WHERE")?;
            let constraint = self.predicate()?;
            self.expect_keyword("THEN")?;
            let body = self.substitution()?;
            self.expect_keyword("END")?;
            // The binder's domain is extracted from the constraint during
            // resolution; a placeholder empty literal marks "not yet known".
            return Ok(Subst::Any {
                var,
                domain: SetExpr::Literal(Vec::new()),
                constraint,
                body: Box::new(body),
            });
        }
        // `x := E` or `x :: S`
        let var = self.name("variable")?;
        match self.peek() {
            Some(TokenKind::Becomes) => {
                self.pos += 1;
                let e = self.expr()?;
                Ok(Subst::Assign(var, e))
            }
            Some(TokenKind::DoubleColon) => {
                self.pos += 1;
                let s = self.set_expr()?;
                Ok(Subst::ChooseIn(var, s))
            }
            _ => Err(self.unexpected("`:=` or `::`")),
        }
    }

    // ------------------------------------------------------------------
    // Predicates
    // ------------------------------------------------------------------

    pub(crate) fn predicate(&mut self) -> Result<Pred, ParseError> {
        let mut lhs = self.implication()?;
        while self.at(&TokenKind::Iff) {
            self.pos += 1;
            let rhs = self.implication()?;
            lhs = Pred::iff(lhs, rhs);
        }
        Ok(lhs)
    }

    fn implication(&mut self) -> Result<Pred, ParseError> {
        let lhs = self.disjunction()?;
        if self.at(&TokenKind::Implies) {
            self.pos += 1;
            let rhs = self.implication()?;
            Ok(Pred::implies(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn disjunction(&mut self) -> Result<Pred, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.at_keyword("or") {
            self.pos += 1;
            parts.push(self.conjunction()?);
        }
        Ok(Pred::or(parts))
    }

    fn conjunction(&mut self) -> Result<Pred, ParseError> {
        let mut parts = vec![self.atom()?];
        while self.at(&TokenKind::Ampersand) {
            self.pos += 1;
            parts.push(self.atom()?);
        }
        Ok(Pred::and(parts))
    }

    fn atom(&mut self) -> Result<Pred, ParseError> {
        if self.at_keyword("true") {
            self.pos += 1;
            return Ok(Pred::True);
        }
        if self.at_keyword("false") {
            self.pos += 1;
            return Ok(Pred::False);
        }
        if self.at_keyword("not") {
            self.pos += 1;
            self.expect(TokenKind::LParen)?;
            let inner = self.predicate()?;
            self.expect(TokenKind::RParen)?;
            return Ok(Pred::not(inner));
        }
        if self.at(&TokenKind::Bang) {
            return self.quantifier(true);
        }
        if self.at(&TokenKind::Hash) {
            return self.quantifier(false);
        }
        if self.at(&TokenKind::LParen) {
            // Either a parenthesized predicate or a comparison whose
            // left-hand expression is parenthesized, e.g. `(x - 1) = 2`.
            // Try the predicate reading first and fall back on failure.
            let mark = self.pos;
            self.pos += 1;
            if let Ok(inner) = self.predicate() {
                if self.at(&TokenKind::RParen) {
                    self.pos += 1;
                    return Ok(inner);
                }
            }
            self.pos = mark;
        }
        self.comparison()
    }

    /// `!z.(z : D => P)` and `#z.(z : D & P)`. The leading typing conjunct
    /// is mandatory: it gives the binder its finite domain.
    fn quantifier(&mut self, universal: bool) -> Result<Pred, ParseError> {
        let span = self.span();
        self.pos += 1;
        let var = self.name("bound variable")?;
        self.expect(TokenKind::Dot)?;
        self.expect(TokenKind::LParen)?;
        // Typing prefix: `var : D` followed by `=>` (forall) or `&` (exists).
        let tv = self.name("bound variable")?;
        if tv != var {
            return Err(ParseError::QuantifierShape {
                var: var.clone(),
                span,
            });
        }
        self.expect(TokenKind::Colon)?;
        let domain = self.set_expr()?;
        let body = if universal {
            self.expect(TokenKind::Implies)?;
            self.predicate()?
        } else {
            self.expect(TokenKind::Ampersand)?;
            self.predicate()?
        };
        self.expect(TokenKind::RParen)?;
        Ok(if universal {
            Pred::Forall {
                var,
                domain,
                body: Box::new(body),
            }
        } else {
            Pred::Exists {
                var,
                domain,
                body: Box::new(body),
            }
        })
    }

    fn comparison(&mut self) -> Result<Pred, ParseError> {
        let lhs = self.expr()?;
        match self.peek() {
            Some(TokenKind::Equal) => {
                self.pos += 1;
                Ok(Pred::Eq(lhs, self.expr()?))
            }
            Some(TokenKind::NotEqual) => {
                self.pos += 1;
                Ok(Pred::Neq(lhs, self.expr()?))
            }
            Some(TokenKind::Colon) => {
                self.pos += 1;
                Ok(Pred::Member(lhs, self.set_expr()?))
            }
            Some(TokenKind::Less) => {
                self.pos += 1;
                Ok(Pred::Less(lhs, self.expr()?))
            }
            Some(TokenKind::Leq) => {
                self.pos += 1;
                Ok(Pred::Leq(lhs, self.expr()?))
            }
            Some(TokenKind::Greater) => {
                self.pos += 1;
                Ok(Pred::Greater(lhs, self.expr()?))
            }
            Some(TokenKind::Geq) => {
                self.pos += 1;
                Ok(Pred::Geq(lhs, self.expr()?))
            }
            _ => Err(self.unexpected("a comparison operator")),
        }
    }

    // ------------------------------------------------------------------
    // Expressions and set expressions
    // ------------------------------------------------------------------

    pub(crate) fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(TokenKind::Plus) => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(TokenKind::Minus) => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        match self.peek().cloned() {
            Some(TokenKind::LParen) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect(TokenKind::RParen)?;
                Ok(inner)
            }
            Some(TokenKind::Int(v)) => {
                self.pos += 1;
                Ok(Expr::Int(v))
            }
            Some(TokenKind::Minus) => {
                self.pos += 1;
                match self.bump() {
                    Some(TokenKind::Int(v)) => Ok(Expr::Int(-v)),
                    _ => Err(self.unexpected("an integer literal after `-`")),
                }
            }
            Some(TokenKind::Ident(n)) if n == "bool" => {
                self.pos += 1;
                self.expect(TokenKind::LParen)?;
                let p = self.predicate()?;
                self.expect(TokenKind::RParen)?;
                Ok(Expr::BoolOf(Box::new(p)))
            }
            Some(TokenKind::Ident(n)) if !KEYWORDS.contains(&n.as_str()) => {
                self.pos += 1;
                if self.at(&TokenKind::PrimeSuffix) {
                    self.pos += 1;
                    Ok(Expr::Primed(n))
                } else {
                    Ok(Expr::Ident(n))
                }
            }
            _ => Err(self.unexpected("an expression")),
        }
    }

    pub(crate) fn set_expr(&mut self) -> Result<SetExpr, ParseError> {
        match self.peek().cloned() {
            Some(TokenKind::LBrace) => {
                self.pos += 1;
                let mut elements = Vec::new();
                loop {
                    elements.push(self.name("set element")?);
                    if self.at(&TokenKind::Comma) {
                        self.pos += 1;
                    } else {
                        break;
                    }
                }
                self.expect(TokenKind::RBrace)?;
                Ok(SetExpr::Literal(elements))
            }
            Some(TokenKind::Int(_)) | Some(TokenKind::Minus) => {
                let lo = match self.bump() {
                    Some(TokenKind::Int(v)) => v,
                    Some(TokenKind::Minus) => match self.bump() {
                        Some(TokenKind::Int(v)) => -v,
                        _ => return Err(self.unexpected("an integer literal")),
                    },
                    _ => unreachable!(),
                };
                self.expect(TokenKind::DotDot)?;
                let hi = match self.bump() {
                    Some(TokenKind::Int(v)) => v,
                    Some(TokenKind::Minus) => match self.bump() {
                        Some(TokenKind::Int(v)) => -v,
                        _ => return Err(self.unexpected("an integer literal")),
                    },
                    _ => return Err(self.unexpected("an integer literal")),
                };
                Ok(SetExpr::Interval(lo, hi))
            }
            Some(TokenKind::Ident(n)) => {
                if n == "BOOL" {
                    self.pos += 1;
                    Ok(SetExpr::Bool)
                } else if matches!(n.as_str(), "NAT" | "NATURAL" | "INT" | "INTEGER") {
                    Err(ParseError::NonFiniteDomain {
                        name: n,
                        span: self.span(),
                    })
                } else if KEYWORDS.contains(&n.as_str()) {
                    Err(self.unexpected("a set expression"))
                } else {
                    self.pos += 1;
                    Ok(SetExpr::Named {
                        name: n,
                        elements: Vec::new(),
                    })
                }
            }
            _ => Err(self.unexpected("a set expression")),
        }
    }
}
