//! Abstract syntax for programs, systems and epistemic formulas.

use std::collections::BTreeSet;
use std::fmt;

/// Index of a declared base variable in [`SystemSpec::vars`].
pub type BaseVar = usize;

/// Index of an agent in [`SystemSpec::agents`].
pub type AgentId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    And,
    Or,
    Xor,
    Implies,
    Iff,
}

impl BinOp {
    pub fn apply(self, a: bool, b: bool) -> bool {
        match self {
            BinOp::And => a && b,
            BinOp::Or => a || b,
            BinOp::Xor => a ^ b,
            BinOp::Implies => !a || b,
            BinOp::Iff => a == b,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::And => "&",
            BinOp::Or => "|",
            BinOp::Xor => "^",
            BinOp::Implies => "=>",
            BinOp::Iff => "<=>",
        }
    }
}

/// Boolean program expression with leaves of type `V`.
///
/// The frontend produces `Expr<BaseVar>`; unfolding substitutes vertices of
/// the structured model for the leaves.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr<V = BaseVar> {
    Const(bool),
    Var(V),
    Not(Box<Expr<V>>),
    Bin(BinOp, Box<Expr<V>>, Box<Expr<V>>),
}

impl<V: Copy + Ord> Expr<V> {
    pub fn eval(&self, lookup: &impl Fn(V) -> bool) -> bool {
        match self {
            Expr::Const(b) => *b,
            Expr::Var(v) => lookup(*v),
            Expr::Not(e) => !e.eval(lookup),
            Expr::Bin(op, a, b) => op.apply(a.eval(lookup), b.eval(lookup)),
        }
    }

    /// Three-valued evaluation over a partial assignment; `None` is unknown.
    pub fn eval_partial(&self, lookup: &impl Fn(V) -> Option<bool>) -> Option<bool> {
        match self {
            Expr::Const(b) => Some(*b),
            Expr::Var(v) => lookup(*v),
            Expr::Not(e) => e.eval_partial(lookup).map(|b| !b),
            Expr::Bin(op, a, b) => {
                let x = a.eval_partial(lookup);
                let y = b.eval_partial(lookup);
                match (op, x, y) {
                    (_, Some(x), Some(y)) => Some(op.apply(x, y)),
                    (BinOp::And, Some(false), _) | (BinOp::And, _, Some(false)) => Some(false),
                    (BinOp::Or, Some(true), _) | (BinOp::Or, _, Some(true)) => Some(true),
                    (BinOp::Implies, Some(false), _) | (BinOp::Implies, _, Some(true)) => {
                        Some(true)
                    }
                    _ => None,
                }
            }
        }
    }

    pub fn vars(&self) -> BTreeSet<V> {
        let mut out = BTreeSet::new();
        self.collect_vars(&mut out);
        out
    }

    fn collect_vars(&self, out: &mut BTreeSet<V>) {
        match self {
            Expr::Const(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Not(e) => e.collect_vars(out),
            Expr::Bin(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }

    /// Replaces every leaf by the expression returned from `f`.
    pub fn substitute<W>(&self, f: &impl Fn(V) -> Expr<W>) -> Expr<W> {
        match self {
            Expr::Const(b) => Expr::Const(*b),
            Expr::Var(v) => f(*v),
            Expr::Not(e) => Expr::Not(Box::new(e.substitute(f))),
            Expr::Bin(op, a, b) => {
                Expr::Bin(*op, Box::new(a.substitute(f)), Box::new(b.substitute(f)))
            }
        }
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr<V>) -> Expr<V> {
        Expr::Not(Box::new(e))
    }

    pub fn bin(op: BinOp, a: Expr<V>, b: Expr<V>) -> Expr<V> {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Stmt {
    Assign(BaseVar, Expr),
    Rand(BaseVar),
}

/// Straightline code: a sequence of assignments and `rand` statements.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Code(pub Vec<Stmt>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Skip,
    Atomic(Code),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AgentProtocol {
    pub name: String,
    pub observes: BTreeSet<BaseVar>,
    /// Padded with `skip` to the horizon during parsing.
    pub actions: Vec<Action>,
}

/// A variable instance `v@t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TimedAtom {
    pub var: BaseVar,
    pub time: usize,
}

/// Epistemic formula: `p | !φ | φ & φ | Knows i φ`.
///
/// Derived connectives are desugared by the parser.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula<A = TimedAtom> {
    Atom(A),
    Not(Box<Formula<A>>),
    And(Box<Formula<A>>, Box<Formula<A>>),
    Knows(AgentId, Box<Formula<A>>),
}

impl<A: Clone + Ord> Formula<A> {
    #[allow(clippy::should_implement_trait)]
    pub fn not(f: Formula<A>) -> Self {
        Formula::Not(Box::new(f))
    }

    pub fn and(a: Formula<A>, b: Formula<A>) -> Self {
        Formula::And(Box::new(a), Box::new(b))
    }

    pub fn or(a: Formula<A>, b: Formula<A>) -> Self {
        Self::not(Self::and(Self::not(a), Self::not(b)))
    }

    pub fn implies(a: Formula<A>, b: Formula<A>) -> Self {
        Self::not(Self::and(a, Self::not(b)))
    }

    pub fn iff(a: Formula<A>, b: Formula<A>) -> Self {
        Self::and(Self::implies(a.clone(), b.clone()), Self::implies(b, a))
    }

    pub fn knows(agent: AgentId, f: Formula<A>) -> Self {
        Formula::Knows(agent, Box::new(f))
    }

    pub fn atoms(&self) -> BTreeSet<A> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Atom(a) = f {
                out.insert(a.clone());
            }
        });
        out
    }

    /// Agents whose knowledge operator occurs in the formula.
    pub fn agents(&self) -> BTreeSet<AgentId> {
        let mut out = BTreeSet::new();
        self.visit(&mut |f| {
            if let Formula::Knows(i, _) = f {
                out.insert(*i);
            }
        });
        out
    }

    pub fn knowledge_depth(&self) -> usize {
        match self {
            Formula::Atom(_) => 0,
            Formula::Not(f) => f.knowledge_depth(),
            Formula::And(a, b) => a.knowledge_depth().max(b.knowledge_depth()),
            Formula::Knows(_, f) => 1 + f.knowledge_depth(),
        }
    }

    /// Pre-order traversal.
    pub fn visit<'a>(&'a self, f: &mut impl FnMut(&'a Formula<A>)) {
        f(self);
        match self {
            Formula::Atom(_) => {}
            Formula::Not(g) | Formula::Knows(_, g) => g.visit(f),
            Formula::And(a, b) => {
                a.visit(f);
                b.visit(f);
            }
        }
    }

    pub fn map_atoms<B, E>(&self, f: &impl Fn(&A) -> Result<B, E>) -> Result<Formula<B>, E> {
        Ok(match self {
            Formula::Atom(a) => Formula::Atom(f(a)?),
            Formula::Not(g) => Formula::Not(Box::new(g.map_atoms(f)?)),
            Formula::And(a, b) => {
                Formula::And(Box::new(a.map_atoms(f)?), Box::new(b.map_atoms(f)?))
            }
            Formula::Knows(i, g) => Formula::Knows(*i, Box::new(g.map_atoms(f)?)),
        })
    }
}

/// A named property to check at a given time.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SpecItem {
    pub name: Option<String>,
    pub formula: Formula,
    pub time: usize,
}

/// A joint protocol together with initial condition, observables and
/// specifications.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SystemSpec {
    pub vars: Vec<String>,
    pub agents: Vec<AgentProtocol>,
    pub env: Code,
    pub init: Expr,
    pub horizon: usize,
    pub specs: Vec<SpecItem>,
}

impl SystemSpec {
    pub fn var_index(&self, name: &str) -> Option<BaseVar> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn agent_index(&self, name: &str) -> Option<AgentId> {
        self.agents.iter().position(|a| a.name == name)
    }

    /// The action agent `agent` takes during tick `tick` (1-based).
    pub fn action(&self, agent: AgentId, tick: usize) -> &Action {
        self.agents[agent]
            .actions
            .get(tick - 1)
            .unwrap_or(&Action::Skip)
    }

    pub fn atom_name(&self, atom: TimedAtom) -> String {
        format!("{}@{}", self.vars[atom.var], atom.time)
    }

    /// Returns a copy unrolled for a different horizon, keeping the
    /// protocols and re-padding with `skip`.
    pub fn with_horizon(&self, horizon: usize) -> SystemSpec {
        let mut out = self.clone();
        out.horizon = horizon;
        for agent in &mut out.agents {
            while agent.actions.len() < horizon {
                agent.actions.push(Action::Skip);
            }
        }
        out
    }
}

impl fmt::Display for TimedAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "v{}@{}", self.var, self.time)
    }
}
