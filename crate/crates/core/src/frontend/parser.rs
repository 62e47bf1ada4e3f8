//! Recursive descent parser for model files and formulas.
//!
//! Parsing happens in two phases: a syntactic pass producing a name-based
//! tree, then resolution against the declared variables and agents.

use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::lexer::{tokenize, Pos, Tok, Token};
use super::ParseError;

#[derive(Clone, Debug)]
enum RawExpr {
    Const(bool),
    Var(String, Pos),
    Not(Box<RawExpr>),
    Bin(BinOp, Box<RawExpr>, Box<RawExpr>),
}

#[derive(Clone, Debug)]
enum RawStmt {
    Assign(String, Pos, RawExpr),
    Rand(String, Pos),
}

#[derive(Clone, Debug)]
enum RawAction {
    Skip,
    Atomic(Vec<RawStmt>),
}

#[derive(Clone, Debug)]
struct RawAgent {
    name: String,
    pos: Pos,
    observes: Vec<(String, Pos)>,
    actions: Vec<RawAction>,
}

#[derive(Clone, Debug)]
enum RawFormula {
    Atom {
        name: String,
        pos: Pos,
        time: Option<(u64, Pos)>,
    },
    Not(Box<RawFormula>),
    Bin(BinOp, Box<RawFormula>, Box<RawFormula>),
    Knows(String, Pos, Box<RawFormula>),
}

impl RawFormula {
    fn rightmost_atom_mut(&mut self) -> &mut RawFormula {
        match self {
            RawFormula::Atom { .. } => self,
            RawFormula::Not(f) | RawFormula::Knows(_, _, f) => f.rightmost_atom_mut(),
            RawFormula::Bin(_, _, b) => b.rightmost_atom_mut(),
        }
    }
}

#[derive(Clone, Debug)]
struct RawSpec {
    name: Option<String>,
    formula: RawFormula,
    time: Option<(u64, Pos)>,
    pos: Pos,
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

fn err_at(pos: Pos, message: impl Into<String>) -> ParseError {
    ParseError {
        line: pos.line,
        col: pos.col,
        message: message.into(),
    }
}

impl Parser {
    fn new(src: &str) -> PResult<Self> {
        Ok(Self {
            toks: tokenize(src)?,
            pos: 0,
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn peek_at(&self, k: usize) -> &Tok {
        &self.toks[(self.pos + k).min(self.toks.len() - 1)].tok
    }

    fn here(&self) -> Pos {
        self.toks[self.pos].pos
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok) -> PResult<Pos> {
        if self.peek() == tok {
            Ok(self.bump().pos)
        } else {
            Err(self.unexpected(&tok.describe()))
        }
    }

    fn unexpected(&self, expected: &str) -> ParseError {
        err_at(
            self.here(),
            format!("expected {expected}, found {}", self.peek().describe()),
        )
    }

    fn is_keyword(&self, kw: &str) -> bool {
        matches!(self.peek(), Tok::Ident(s) if s == kw)
    }

    fn ident(&mut self) -> PResult<(String, Pos)> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                let p = self.bump().pos;
                Ok((s, p))
            }
            _ => Err(self.unexpected("identifier")),
        }
    }

    fn number(&mut self) -> PResult<(u64, Pos)> {
        match *self.peek() {
            Tok::Num(n) => {
                let p = self.bump().pos;
                Ok((n, p))
            }
            Tok::Minus => Err(err_at(self.here(), "expected a non-negative number")),
            _ => Err(self.unexpected("number")),
        }
    }

    fn ident_list(&mut self) -> PResult<Vec<(String, Pos)>> {
        let mut out = Vec::new();
        if matches!(self.peek(), Tok::Ident(_)) {
            out.push(self.ident()?);
            while self.eat(&Tok::Comma) {
                out.push(self.ident()?);
            }
        }
        Ok(out)
    }

    // ---- expressions -------------------------------------------------

    fn expr(&mut self) -> PResult<RawExpr> {
        let mut lhs = self.expr_implies()?;
        while self.eat(&Tok::DoubleArrow) {
            let rhs = self.expr_implies()?;
            lhs = RawExpr::Bin(BinOp::Iff, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn expr_implies(&mut self) -> PResult<RawExpr> {
        let lhs = self.expr_or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.expr_implies()?;
            return Ok(RawExpr::Bin(BinOp::Implies, Box::new(lhs), Box::new(rhs)));
        }
        Ok(lhs)
    }

    fn expr_or(&mut self) -> PResult<RawExpr> {
        let mut lhs = self.expr_xor()?;
        while self.eat(&Tok::Pipe) {
            let rhs = self.expr_xor()?;
            lhs = RawExpr::Bin(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn expr_xor(&mut self) -> PResult<RawExpr> {
        let mut lhs = self.expr_and()?;
        while self.eat(&Tok::Caret) {
            let rhs = self.expr_and()?;
            lhs = RawExpr::Bin(BinOp::Xor, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn expr_and(&mut self) -> PResult<RawExpr> {
        let mut lhs = self.expr_unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.expr_unary()?;
            lhs = RawExpr::Bin(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn expr_unary(&mut self) -> PResult<RawExpr> {
        if self.eat(&Tok::Bang) {
            return Ok(RawExpr::Not(Box::new(self.expr_unary()?)));
        }
        match self.peek().clone() {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            Tok::Num(n @ (0 | 1)) => {
                self.bump();
                Ok(RawExpr::Const(n == 1))
            }
            Tok::Ident(s) if s == "true" || s == "false" => {
                self.bump();
                Ok(RawExpr::Const(s == "true"))
            }
            Tok::Ident(_) => {
                let (name, pos) = self.ident()?;
                Ok(RawExpr::Var(name, pos))
            }
            _ => Err(self.unexpected("expression")),
        }
    }

    // ---- formulas ----------------------------------------------------

    fn formula(&mut self) -> PResult<RawFormula> {
        let mut lhs = self.formula_implies()?;
        while self.eat(&Tok::DoubleArrow) {
            let rhs = self.formula_implies()?;
            lhs = RawFormula::Bin(BinOp::Iff, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn formula_implies(&mut self) -> PResult<RawFormula> {
        let lhs = self.formula_or()?;
        if self.eat(&Tok::Arrow) {
            let rhs = self.formula_implies()?;
            return Ok(RawFormula::Bin(
                BinOp::Implies,
                Box::new(lhs),
                Box::new(rhs),
            ));
        }
        Ok(lhs)
    }

    fn formula_or(&mut self) -> PResult<RawFormula> {
        let mut lhs = self.formula_and()?;
        while self.eat(&Tok::Pipe) {
            let rhs = self.formula_and()?;
            lhs = RawFormula::Bin(BinOp::Or, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn formula_and(&mut self) -> PResult<RawFormula> {
        let mut lhs = self.formula_unary()?;
        while self.eat(&Tok::Amp) {
            let rhs = self.formula_unary()?;
            lhs = RawFormula::Bin(BinOp::And, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn formula_unary(&mut self) -> PResult<RawFormula> {
        if self.eat(&Tok::Bang) {
            return Ok(RawFormula::Not(Box::new(self.formula_unary()?)));
        }
        if self.is_keyword("Knows") {
            self.bump();
            let (agent, pos) = self.ident()?;
            let inner = self.formula_unary()?;
            return Ok(RawFormula::Knows(agent, pos, Box::new(inner)));
        }
        if self.eat(&Tok::LParen) {
            let f = self.formula()?;
            self.expect(&Tok::RParen)?;
            return Ok(f);
        }
        let (name, pos) = self.ident()?;
        let time = if self.eat(&Tok::At) {
            Some(self.number()?)
        } else {
            None
        };
        Ok(RawFormula::Atom { name, pos, time })
    }

    // ---- programs ----------------------------------------------------

    fn stmt(&mut self) -> PResult<RawStmt> {
        if self.is_keyword("rand") && self.peek_at(1) == &Tok::LParen {
            self.bump();
            self.expect(&Tok::LParen)?;
            let (v, p) = self.ident()?;
            self.expect(&Tok::RParen)?;
            return Ok(RawStmt::Rand(v, p));
        }
        let (v, p) = self.ident()?;
        self.expect(&Tok::Assign)?;
        let e = self.expr()?;
        Ok(RawStmt::Assign(v, p, e))
    }

    /// Statements separated by `;` up to (not including) `close`.
    fn code(&mut self, close: &Tok) -> PResult<Vec<RawStmt>> {
        let mut out = Vec::new();
        while self.peek() != close {
            out.push(self.stmt()?);
            if !self.eat(&Tok::Semi) {
                break;
            }
        }
        Ok(out)
    }

    fn action(&mut self) -> PResult<RawAction> {
        if self.is_keyword("skip") {
            self.bump();
            return Ok(RawAction::Skip);
        }
        if self.eat(&Tok::LAngle) {
            let code = self.code(&Tok::RAngle)?;
            self.expect(&Tok::RAngle)?;
            return Ok(RawAction::Atomic(code));
        }
        Ok(RawAction::Atomic(vec![self.stmt()?]))
    }

    fn agent(&mut self) -> PResult<RawAgent> {
        let (name, pos) = self.ident()?;
        self.expect(&Tok::LBrace)?;
        let mut observes = Vec::new();
        let mut actions = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.is_keyword("observes") {
                self.bump();
                self.expect(&Tok::Colon)?;
                observes.extend(self.ident_list()?);
                self.expect(&Tok::Semi)?;
            } else if self.is_keyword("protocol") {
                self.bump();
                self.expect(&Tok::Colon)?;
                while self.peek() != &Tok::RBrace && !self.is_keyword("observes") {
                    actions.push(self.action()?);
                    if !self.eat(&Tok::Semi) {
                        break;
                    }
                }
            } else {
                return Err(self.unexpected("`observes`, `protocol` or `}`"));
            }
        }
        Ok(RawAgent {
            name,
            pos,
            observes,
            actions,
        })
    }

    fn spec_item(&mut self) -> PResult<RawSpec> {
        let pos = self.here();
        let name = if matches!(self.peek(), Tok::Ident(_)) {
            Some(self.ident()?.0)
        } else {
            None
        };
        self.expect(&Tok::Colon)?;
        let mut formula = self.formula()?;
        let mut time = if self.eat(&Tok::At) {
            Some(self.number()?)
        } else {
            None
        };
        // `spec: a & b @ 3` reads the trailing `@ 3` as the evaluation time.
        if time.is_none() {
            if let RawFormula::Atom { time: t, .. } = formula.rightmost_atom_mut() {
                time = t.take();
            }
        }
        self.expect(&Tok::Semi)?;
        Ok(RawSpec {
            name,
            formula,
            time,
            pos,
        })
    }
}

#[derive(Default)]
struct RawSystem {
    vars: Vec<(String, Pos)>,
    agents: Vec<RawAgent>,
    env: Vec<RawStmt>,
    init: Option<RawExpr>,
    horizon: Option<(u64, Pos)>,
    specs: Vec<RawSpec>,
}

fn parse_raw_system(src: &str) -> PResult<RawSystem> {
    let mut p = Parser::new(src)?;
    let mut sys = RawSystem::default();
    loop {
        let (kw, pos) = match p.peek().clone() {
            Tok::Eof => break,
            Tok::Ident(s) => (s, p.here()),
            _ => return Err(p.unexpected("a declaration")),
        };
        p.bump();
        match kw.as_str() {
            "vars" => {
                p.eat(&Tok::Colon);
                sys.vars.extend(p.ident_list()?);
                p.expect(&Tok::Semi)?;
            }
            "agent" => sys.agents.push(p.agent()?),
            "env" => {
                p.expect(&Tok::LBrace)?;
                sys.env.extend(p.code(&Tok::RBrace)?);
                p.expect(&Tok::RBrace)?;
            }
            "init" => {
                p.expect(&Tok::Colon)?;
                if sys.init.is_some() {
                    return Err(err_at(pos, "duplicate `init` declaration"));
                }
                sys.init = Some(p.expr()?);
                p.expect(&Tok::Semi)?;
            }
            "horizon" => {
                p.expect(&Tok::Colon)?;
                if p.peek() == &Tok::Minus {
                    return Err(err_at(p.here(), "horizon must be non-negative"));
                }
                sys.horizon = Some(p.number()?);
                p.expect(&Tok::Semi)?;
            }
            "spec" => sys.specs.push(p.spec_item()?),
            other => {
                return Err(err_at(
                    pos,
                    format!("expected a declaration, found `{other}`"),
                ))
            }
        }
    }
    Ok(sys)
}

struct Scope<'a> {
    vars: HashMap<&'a str, BaseVar>,
    agents: HashMap<&'a str, AgentId>,
    horizon: usize,
}

impl<'a> Scope<'a> {
    fn of(spec: &'a SystemSpec) -> Self {
        Self {
            vars: spec
                .vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.as_str(), i))
                .collect(),
            agents: spec
                .agents
                .iter()
                .enumerate()
                .map(|(i, a)| (a.name.as_str(), i))
                .collect(),
            horizon: spec.horizon,
        }
    }

    fn var(&self, name: &str, pos: Pos) -> PResult<BaseVar> {
        self.vars
            .get(name)
            .copied()
            .ok_or_else(|| err_at(pos, format!("undeclared variable `{name}`")))
    }

    fn expr(&self, e: &RawExpr) -> PResult<Expr> {
        Ok(match e {
            RawExpr::Const(b) => Expr::Const(*b),
            RawExpr::Var(n, p) => Expr::Var(self.var(n, *p)?),
            RawExpr::Not(e) => Expr::not(self.expr(e)?),
            RawExpr::Bin(op, a, b) => Expr::bin(*op, self.expr(a)?, self.expr(b)?),
        })
    }

    fn code(&self, stmts: &[RawStmt]) -> PResult<Code> {
        stmts
            .iter()
            .map(|s| {
                Ok(match s {
                    RawStmt::Assign(v, p, e) => Stmt::Assign(self.var(v, *p)?, self.expr(e)?),
                    RawStmt::Rand(v, p) => Stmt::Rand(self.var(v, *p)?),
                })
            })
            .collect::<PResult<Vec<_>>>()
            .map(Code)
    }

    fn formula(&self, f: &RawFormula, default_time: usize) -> PResult<Formula> {
        Ok(match f {
            RawFormula::Atom { name, pos, time } => {
                let var = self.var(name, *pos)?;
                let time = match time {
                    Some((t, tp)) => {
                        if *t as usize > self.horizon {
                            return Err(err_at(
                                *tp,
                                format!(
                                    "time index {t} out of range (horizon is {})",
                                    self.horizon
                                ),
                            ));
                        }
                        *t as usize
                    }
                    None => default_time,
                };
                Formula::Atom(TimedAtom { var, time })
            }
            RawFormula::Not(g) => Formula::not(self.formula(g, default_time)?),
            RawFormula::Bin(op, a, b) => {
                let a = self.formula(a, default_time)?;
                let b = self.formula(b, default_time)?;
                match op {
                    BinOp::And => Formula::and(a, b),
                    BinOp::Or => Formula::or(a, b),
                    BinOp::Implies => Formula::implies(a, b),
                    BinOp::Iff => Formula::iff(a, b),
                    BinOp::Xor => Formula::not(Formula::iff(a, b)),
                }
            }
            RawFormula::Knows(agent, pos, g) => {
                let i = self
                    .agents
                    .get(agent.as_str())
                    .copied()
                    .ok_or_else(|| err_at(*pos, format!("unknown agent `{agent}`")))?;
                Formula::knows(i, self.formula(g, default_time)?)
            }
        })
    }
}

/// Settings that take precedence over the model file.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Overrides {
    pub horizon: Option<usize>,
    /// Evaluation time for every specification.
    pub time: Option<usize>,
}

/// Parses and validates a model file.
pub fn parse_system(src: &str) -> PResult<SystemSpec> {
    parse_system_with(src, Overrides::default())
}

/// Like [`parse_system`], with the horizon and evaluation time replaced
/// where `overrides` sets them.
pub fn parse_system_with(src: &str, overrides: Overrides) -> PResult<SystemSpec> {
    let raw = parse_raw_system(src)?;

    let mut vars = Vec::new();
    let mut seen = BTreeSet::new();
    for (v, p) in &raw.vars {
        if !seen.insert(v.clone()) {
            return Err(err_at(*p, format!("duplicate variable `{v}`")));
        }
        vars.push(v.clone());
    }
    if raw.agents.is_empty() {
        return Err(err_at(Pos { line: 1, col: 1 }, "no agents"));
    }
    let mut agent_names = BTreeSet::new();
    for a in &raw.agents {
        if !agent_names.insert(a.name.clone()) {
            return Err(err_at(a.pos, format!("duplicate agent id `{}`", a.name)));
        }
    }

    let longest = raw
        .agents
        .iter()
        .map(|a| a.actions.len())
        .max()
        .unwrap_or(0);
    let horizon = match (overrides.horizon, raw.horizon) {
        (Some(h), _) => h,
        (None, Some((h, _))) => h as usize,
        (None, None) => longest,
    };

    let mut spec = SystemSpec {
        vars,
        agents: raw
            .agents
            .iter()
            .map(|a| AgentProtocol {
                name: a.name.clone(),
                observes: BTreeSet::new(),
                actions: Vec::new(),
            })
            .collect(),
        env: Code::default(),
        init: Expr::Const(true),
        horizon,
        specs: Vec::new(),
    };

    let (agents, env, init, specs) = {
        let scope = Scope::of(&spec);
        let mut agents = Vec::new();
        for a in &raw.agents {
            let observes = a
                .observes
                .iter()
                .map(|(v, p)| scope.var(v, *p))
                .collect::<PResult<BTreeSet<_>>>()?;
            let mut actions = a
                .actions
                .iter()
                .map(|act| {
                    Ok(match act {
                        RawAction::Skip => Action::Skip,
                        RawAction::Atomic(code) => Action::Atomic(scope.code(code)?),
                    })
                })
                .collect::<PResult<Vec<_>>>()?;
            while actions.len() < horizon {
                actions.push(Action::Skip);
            }
            agents.push((observes, actions));
        }
        let env = scope.code(&raw.env)?;
        let init = match &raw.init {
            Some(e) => scope.expr(e)?,
            None => Expr::Const(true),
        };
        let mut specs = Vec::new();
        for s in &raw.specs {
            let time = match overrides.time.map(|t| (t as u64, s.pos)).or(s.time) {
                Some((t, p)) => {
                    if t as usize > horizon {
                        return Err(err_at(
                            p,
                            format!("evaluation time {t} exceeds horizon {horizon}"),
                        ));
                    }
                    t as usize
                }
                None => horizon,
            };
            specs.push(SpecItem {
                name: s.name.clone(),
                formula: scope.formula(&s.formula, time)?,
                time,
            });
        }
        (agents, env, init, specs)
    };

    for (slot, (observes, actions)) in spec.agents.iter_mut().zip(agents) {
        slot.observes = observes;
        slot.actions = actions;
    }
    spec.env = env;
    spec.init = init;
    spec.specs = specs;
    Ok(spec)
}

/// Parses a formula against the variables and agents of `spec`, stamping
/// untimed atoms with `default_time`.
pub fn parse_formula(src: &str, default_time: usize, spec: &SystemSpec) -> PResult<Formula> {
    if default_time > spec.horizon {
        return Err(err_at(
            Pos { line: 1, col: 1 },
            format!(
                "time index {default_time} out of range (horizon is {})",
                spec.horizon
            ),
        ));
    }
    let mut p = Parser::new(src)?;
    let f = p.formula()?;
    if p.peek() != &Tok::Eof {
        return Err(p.unexpected("end of formula"));
    }
    Scope::of(spec).formula(&f, default_time)
}
