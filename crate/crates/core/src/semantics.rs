//! Concrete operational semantics of programs and explicit run
//! enumeration, used as ground truth for the symbolic pipeline.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::frontend::ast::{Action, BaseVar, Code, Expr, Stmt, SystemSpec};
use crate::limits::Deadline;
use crate::model::{EpistemicStructure, VarTable};
use crate::valuation::{RelationBuilder, VarId};

/// A total assignment of the declared base variables.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State {
    bits: Vec<u64>,
    len: usize,
}

impl State {
    pub fn zeros(len: usize) -> Self {
        State {
            bits: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(values: &[bool]) -> Self {
        let mut s = State::zeros(values.len());
        for (i, &b) in values.iter().enumerate() {
            s.set(i, b);
        }
        s
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, v: BaseVar) -> bool {
        (self.bits[v / 64] >> (v % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, v: BaseVar, b: bool) {
        let m = 1u64 << (v % 64);
        if b {
            self.bits[v / 64] |= m;
        } else {
            self.bits[v / 64] &= !m;
        }
    }

    pub fn eval(&self, e: &Expr) -> bool {
        e.eval(&|v| self.get(v))
    }
}

fn run_code(state: State, code: &[&Stmt], out: &mut impl FnMut(State)) {
    let mut state = state;
    for (k, stmt) in code.iter().enumerate() {
        match stmt {
            Stmt::Assign(v, e) => {
                let b = state.eval(e);
                state.set(*v, b);
            }
            Stmt::Rand(v) => {
                let mut other = state.clone();
                other.set(*v, true);
                state.set(*v, false);
                run_code(state, &code[k + 1..], out);
                run_code(other, &code[k + 1..], out);
                return;
            }
        }
    }
    out(state);
}

/// Terminal states of running `code` to completion from `state`.
pub fn zero_step_closure(state: &State, code: &Code) -> BTreeSet<State> {
    let stmts: Vec<&Stmt> = code.0.iter().collect();
    let mut out = BTreeSet::new();
    run_code(state.clone(), &stmts, &mut |s| {
        out.insert(s);
    });
    out
}

fn tick_code<'a>(pending: &[&'a Action], env: &'a Code) -> Vec<&'a Stmt> {
    let mut stmts = Vec::new();
    for a in pending {
        if let Action::Atomic(c) = a {
            stmts.extend(c.0.iter());
        }
    }
    stmts.extend(env.0.iter());
    stmts
}

/// One clock tick: the pending agent actions in agent order, then the
/// environment code.
pub fn tick_step(state: &State, pending: &[&Action], env: &Code) -> BTreeSet<State> {
    let stmts = tick_code(pending, env);
    let mut out = BTreeSet::new();
    run_code(state.clone(), &stmts, &mut |s| {
        out.insert(s);
    });
    out
}

/// Satisfying assignments of the initial condition over its own
/// variables, in lexicographic order (variables ascending, 0 before 1).
pub fn init_assignments(spec: &SystemSpec) -> (Vec<BaseVar>, Vec<Vec<bool>>) {
    let vars: Vec<BaseVar> = spec.init.vars().into_iter().collect();
    let mut out = Vec::new();
    let mut partial: Vec<Option<bool>> = vec![None; spec.vars.len()];
    fn go(
        init: &Expr,
        vars: &[BaseVar],
        k: usize,
        partial: &mut Vec<Option<bool>>,
        out: &mut Vec<Vec<bool>>,
    ) {
        match init.eval_partial(&|v| partial[v]) {
            Some(false) => return,
            Some(true) if k == vars.len() => {
                out.push(vars.iter().map(|&v| partial[v].unwrap()).collect());
                return;
            }
            _ => {}
        }
        if k == vars.len() {
            return;
        }
        for b in [false, true] {
            partial[vars[k]] = Some(b);
            go(init, vars, k + 1, partial, out);
        }
        partial[vars[k]] = None;
    }
    go(&spec.init, &vars, 0, &mut partial, &mut out);
    (vars, out)
}

/// Initial states: satisfying assignments of the initial condition combined
/// with every value of the variables it does not mention.
pub fn initial_states(spec: &SystemSpec) -> Vec<State> {
    let (ivars, sats) = init_assignments(spec);
    let free: Vec<BaseVar> = (0..spec.vars.len())
        .filter(|v| !ivars.contains(v))
        .collect();
    let mut out = Vec::new();
    for sat in &sats {
        for bits in 0u64..(1u64 << free.len()) {
            let mut s = State::zeros(spec.vars.len());
            for (i, &v) in ivars.iter().enumerate() {
                s.set(v, sat[i]);
            }
            for (i, &v) in free.iter().enumerate() {
                s.set(v, (bits >> (free.len() - 1 - i)) & 1 == 1);
            }
            out.push(s);
        }
    }
    out
}

/// Limits on explicit enumeration.
#[derive(Clone, Copy, Debug)]
pub struct EnumLimits {
    pub max_worlds: u64,
    pub deadline: Deadline,
}

impl Default for EnumLimits {
    fn default() -> Self {
        EnumLimits {
            max_worlds: 1 << 24,
            deadline: Deadline::none(),
        }
    }
}

fn tick_programs(spec: &SystemSpec) -> Vec<Vec<&Stmt>> {
    (1..=spec.horizon)
        .map(|t| {
            let pending: Vec<&Action> = (0..spec.agents.len()).map(|i| spec.action(i, t)).collect();
            tick_code(&pending, &spec.env)
        })
        .collect()
}

/// Number of runs up to the horizon. Fails once the count passes
/// `limits.max_worlds`.
pub fn count_runs(spec: &SystemSpec, limits: &EnumLimits) -> Result<u64> {
    count_by_layers(spec, limits, 1 << 21)
}

struct PathCounter<'a> {
    programs: &'a [Vec<&'a Stmt>],
    limits: &'a EnumLimits,
    paths: u64,
    visits: u64,
}

impl PathCounter<'_> {
    fn add(&mut self, n: u64) -> Result<()> {
        self.paths += n;
        if self.paths > self.limits.max_worlds {
            return Err(Error::Overflow {
                cap: self.limits.max_worlds,
            });
        }
        Ok(())
    }

    /// Adds `weight` for every continuation of `s` from tick `t` on.
    fn dfs(&mut self, s: State, t: usize, weight: u64) -> Result<()> {
        if t == self.programs.len() {
            return self.add(weight);
        }
        self.visits += 1;
        if self.visits.is_multiple_of(4096) {
            self.limits.deadline.check()?;
        }
        let mut succ = Vec::new();
        run_code(s, &self.programs[t], &mut |x| succ.push(x));
        succ.sort();
        succ.dedup();
        for x in succ {
            self.dfs(x, t + 1, weight)?;
        }
        Ok(())
    }
}

/// Counts runs by merging equal states tick by tick. A layer with more
/// than `max_states` distinct states is only counted, which already decides
/// overflow since every state has a successor; if it stays under the cap
/// the remaining ticks are counted depth first.
fn count_by_layers(spec: &SystemSpec, limits: &EnumLimits, max_states: usize) -> Result<u64> {
    let (ivars, sats) = init_assignments(spec);
    if sats.is_empty() {
        return Err(Error::UnsatisfiableInit);
    }
    let free = spec.vars.len() - ivars.len();
    if free >= 64 || (sats.len() as u128) << free > limits.max_worlds as u128 {
        return Err(Error::Overflow {
            cap: limits.max_worlds,
        });
    }
    let programs = tick_programs(spec);
    let mut layer: HashMap<State, u64> = initial_states(spec).into_iter().map(|s| (s, 1)).collect();
    for (t, code) in programs.iter().enumerate() {
        let mut next: HashMap<State, u64> = HashMap::new();
        let mut counter = PathCounter {
            programs: &programs,
            limits,
            paths: 0,
            visits: 0,
        };
        let mut full = false;
        for (k, (s, &n)) in layer.iter().enumerate() {
            if k % 4096 == 0 {
                limits.deadline.check()?;
            }
            let mut succ = Vec::new();
            run_code(s.clone(), code, &mut |x| succ.push(x));
            succ.sort();
            succ.dedup();
            for x in succ {
                counter.add(n)?;
                if !full {
                    *next.entry(x).or_default() += n;
                }
            }
            if next.len() > max_states && !full {
                full = true;
                next = HashMap::new();
            }
        }
        if full {
            counter.paths = 0;
            for (s, n) in layer {
                counter.dfs(s, t, n)?;
            }
            return Ok(counter.paths);
        }
        layer = next;
    }
    Ok(layer.values().sum())
}

/// Visits every run of the system up to the horizon.
fn for_each_run(
    spec: &SystemSpec,
    limits: &EnumLimits,
    visit: &mut impl FnMut(&[State]) -> Result<bool>,
) -> Result<()> {
    let (ivars, sats) = init_assignments(spec);
    if sats.is_empty() {
        return Err(Error::UnsatisfiableInit);
    }
    let free = spec.vars.len() - ivars.len();
    let initial = (sats.len() as u128) << free.min(100);
    if free >= 64 || initial > limits.max_worlds as u128 {
        return Err(Error::Overflow {
            cap: limits.max_worlds,
        });
    }
    let ticks = tick_programs(spec);

    struct Walk<'a, F> {
        ticks: &'a [Vec<&'a Stmt>],
        path: Vec<State>,
        visit: &'a mut F,
        count: u64,
        limits: &'a EnumLimits,
        stop: bool,
    }
    impl<F: FnMut(&[State]) -> Result<bool>> Walk<'_, F> {
        fn go(&mut self) -> Result<()> {
            if self.stop {
                return Ok(());
            }
            let t = self.path.len() - 1;
            if t == self.ticks.len() {
                self.count += 1;
                if self.count > self.limits.max_worlds {
                    return Err(Error::Overflow {
                        cap: self.limits.max_worlds,
                    });
                }
                if self.count.is_multiple_of(4096) {
                    self.limits.deadline.check()?;
                }
                if !(self.visit)(&self.path)? {
                    self.stop = true;
                }
                return Ok(());
            }
            let mut next = Vec::new();
            run_code(self.path[t].clone(), &self.ticks[t], &mut |s| next.push(s));
            next.sort();
            next.dedup();
            for s in next {
                self.path.push(s);
                self.go()?;
                self.path.pop();
                if self.stop {
                    break;
                }
            }
            Ok(())
        }
    }

    let mut walk = Walk {
        ticks: &ticks,
        path: Vec::new(),
        visit,
        count: 0,
        limits,
        stop: false,
    };
    for s in initial_states(spec) {
        walk.path.push(s);
        walk.go()?;
        walk.path.pop();
        if walk.stop {
            break;
        }
    }
    Ok(())
}

/// All runs, in enumeration order.
pub fn runs(spec: &SystemSpec, limits: &EnumLimits) -> Result<Vec<Vec<State>>> {
    let mut out = Vec::new();
    for_each_run(spec, limits, &mut |r| {
        out.push(r.to_vec());
        Ok(true)
    })?;
    Ok(out)
}

/// The epistemic structure of the system at its horizon: one world per
/// run, over every timed program variable, with agents observing all
/// timed instances of their observable variables.
pub fn enumerate_structure(spec: &SystemSpec, limits: &EnumLimits) -> Result<EpistemicStructure> {
    let table = &VarTable::program_only(spec);
    let nb = spec.vars.len();
    let schema: Vec<(VarId, u32)> = (0..(spec.horizon + 1) * nb)
        .map(|i| (VarId(i as u32), 2))
        .collect();
    count_runs(spec, limits)?;
    let mut builder = RelationBuilder::new(&schema)?;
    for_each_run(spec, limits, &mut |run| {
        builder.push(|i| run[i / nb].get(i % nb) as u32);
        Ok(true)
    })?;
    let observables = spec
        .agents
        .iter()
        .map(|a| {
            (0..=spec.horizon)
                .flat_map(|t| a.observes.iter().map(move |&v| table.program(v, t)))
                .collect()
        })
        .collect();
    Ok(EpistemicStructure {
        worlds: builder.finish(),
        observables,
    })
}

/// The first run agreeing with every listed timed program variable.
pub fn find_run(
    spec: &SystemSpec,
    partial: &[(VarId, bool)],
    limits: &EnumLimits,
) -> Result<Option<Vec<State>>> {
    let nb = spec.vars.len();
    let mut found = None;
    for_each_run(spec, limits, &mut |run| {
        let ok = partial.iter().all(|&(v, b)| {
            let i = v.0 as usize;
            i < run.len() * nb && run[i / nb].get(i % nb) == b
        });
        if ok {
            found = Some(run.to_vec());
        }
        Ok(!ok)
    })?;
    Ok(found)
}

/// Renders a run as lines `t: var=bit,...`.
pub fn format_run(spec: &SystemSpec, run: &[State]) -> String {
    let mut out = String::new();
    for (t, s) in run.iter().enumerate() {
        let fields: Vec<String> = spec
            .vars
            .iter()
            .enumerate()
            .map(|(i, name)| format!("{name}={}", s.get(i) as u8))
            .collect();
        let _ = writeln!(out, "{t}: {}", fields.join(","));
    }
    out
}
