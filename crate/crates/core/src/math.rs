//! Equation-system reification for math traces.
//!
//! Derivations are evaluated forward in dependency order with exact
//! rationals. Systems that are not forward-evaluable (cycles) are rejected.

use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use thiserror::Error;

use crate::reified::{ReifiedTrace, StepRecord, ToolKind};
use crate::trace::{placeholder_refs, Derivation, Domain, Placeholder, Segment, Trace, UnboundPlaceholder};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum MathError {
    #[error("cyclic dependency: {}", join(.0))]
    CyclicDependency(Vec<Placeholder>),
    #[error("{0} is defined more than once")]
    Redefinition(Placeholder),
    #[error("division by zero in [{derivation}]")]
    DivisionByZero { result: Placeholder, derivation: String },
    #[error(transparent)]
    Unbound(#[from] UnboundPlaceholder),
    #[error("no derivations to take a final answer from")]
    NoFinalAnswer,
    #[error("expected a math trace")]
    WrongDomain,
}

fn join(ps: &[Placeholder]) -> String {
    ps.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(" -> ")
}

/// Derivations plus their dependency graph (result -> operands).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EquationSystem {
    derivations: Vec<Derivation>,
    deps: Vec<BTreeSet<Placeholder>>,
    by_result: BTreeMap<Placeholder, usize>,
}

impl EquationSystem {
    /// Checks single assignment, that every operand is defined, and
    /// acyclicity.
    pub fn new(derivations: Vec<Derivation>) -> Result<Self, MathError> {
        let mut by_result = BTreeMap::new();
        for (i, d) in derivations.iter().enumerate() {
            if by_result.insert(d.result, i).is_some() {
                return Err(MathError::Redefinition(d.result));
            }
        }
        let deps: Vec<BTreeSet<Placeholder>> = derivations.iter().map(|d| d.lhs.vars()).collect();
        let undefined: BTreeSet<Placeholder> = deps
            .iter()
            .flatten()
            .filter(|p| !by_result.contains_key(p))
            .copied()
            .collect();
        if !undefined.is_empty() {
            return Err(UnboundPlaceholder(undefined.into_iter().collect()).into());
        }
        let system = EquationSystem {
            derivations,
            deps,
            by_result,
        };
        system.order()?;
        Ok(system)
    }

    pub fn from_trace(trace: &Trace) -> Result<Self, MathError> {
        if trace.domain() != Domain::Math {
            return Err(MathError::WrongDomain);
        }
        EquationSystem::new(trace.derivations().cloned().collect())
    }

    pub fn derivations(&self) -> &[Derivation] {
        &self.derivations
    }

    pub fn is_empty(&self) -> bool {
        self.derivations.is_empty()
    }

    /// Operands of the derivation defining `p`.
    pub fn deps(&self, p: Placeholder) -> Option<&BTreeSet<Placeholder>> {
        self.by_result.get(&p).map(|&i| &self.deps[i])
    }

    /// Edges `result -> operand`, in derivation order.
    pub fn edges(&self) -> Vec<(Placeholder, Placeholder)> {
        self.derivations
            .iter()
            .zip(&self.deps)
            .flat_map(|(d, ds)| ds.iter().map(move |&o| (d.result, o)))
            .collect()
    }

    /// Derivation indices in evaluation order. Among ready derivations the
    /// earliest in trace order goes first.
    pub fn order(&self) -> Result<Vec<usize>, MathError> {
        let n = self.derivations.len();
        let mut pending: Vec<usize> = self.deps.iter().map(BTreeSet::len).collect();
        let mut users: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, ds) in self.deps.iter().enumerate() {
            for p in ds {
                users[self.by_result[p]].push(i);
            }
        }
        let mut ready: BTreeSet<usize> = (0..n).filter(|&i| pending[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(i) = ready.pop_first() {
            order.push(i);
            for &u in &users[i] {
                pending[u] -= 1;
                if pending[u] == 0 {
                    ready.insert(u);
                }
            }
        }
        if order.len() < n {
            return Err(MathError::CyclicDependency(self.find_cycle(&pending)));
        }
        Ok(order)
    }

    /// Walks unresolved dependencies from the first stuck derivation until a
    /// placeholder repeats.
    fn find_cycle(&self, pending: &[usize]) -> Vec<Placeholder> {
        let stuck = |p: &Placeholder| pending[self.by_result[p]] > 0;
        let mut path: Vec<Placeholder> = Vec::new();
        let mut cur = self.derivations[pending.iter().position(|&c| c > 0).expect("some derivation is stuck")].result;
        loop {
            if let Some(pos) = path.iter().position(|&p| p == cur) {
                let mut cycle = path[pos..].to_vec();
                cycle.push(cur);
                return cycle;
            }
            path.push(cur);
            let i = self.by_result[&cur];
            cur = *self.deps[i]
                .iter()
                .find(|p| stuck(p))
                .expect("stuck derivation has a stuck operand");
        }
    }
}

/// Binds every defined placeholder.
pub fn solve(system: &EquationSystem) -> Result<BTreeMap<Placeholder, Value>, MathError> {
    solve_timed(system).map(|(b, _)| b)
}

fn solve_timed(system: &EquationSystem) -> Result<(BTreeMap<Placeholder, Value>, Vec<StepRecord>), MathError> {
    let mut values: BTreeMap<Placeholder, Value> = BTreeMap::new();
    let mut steps = Vec::new();
    for i in system.order()? {
        let started = Instant::now();
        let d = &system.derivations[i];
        let v = d
            .lhs
            .eval(&|p| values.get(&p).cloned())
            .map_err(|p| MathError::Unbound(UnboundPlaceholder(vec![p])))?
            .ok_or_else(|| MathError::DivisionByZero {
                result: d.result,
                derivation: format!("{} = {}", d.lhs, d.result),
            })?;
        let input = d.lhs.render_with(&|p| values[&p].to_string());
        values.insert(d.result, v);
        steps.push(StepRecord {
            step: i + 1,
            output: d.result,
            tool: ToolKind::Solver,
            input,
            candidates: Vec::new(),
            latency: started.elapsed(),
        });
    }
    Ok((values, steps))
}

/// Solves a math trace and binds its answer placeholder: the one named in
/// the last "answer is" statement, else the last derivation's result.
pub fn reify_math(trace: &Trace) -> Result<ReifiedTrace<Value>, MathError> {
    let system = EquationSystem::from_trace(trace)?;
    if system.is_empty() {
        return Err(MathError::NoFinalAnswer);
    }
    let (bindings, steps) = solve_timed(&system)?;
    let unbound: Vec<Placeholder> = trace
        .used()
        .iter()
        .filter(|p| !bindings.contains_key(p))
        .copied()
        .collect();
    if !unbound.is_empty() {
        return Err(UnboundPlaceholder(unbound).into());
    }
    let answer_var = stated_answer(trace)
        .filter(|p| bindings.contains_key(p))
        .or_else(|| system.derivations().last().map(|d| d.result));
    Ok(ReifiedTrace {
        trace: trace.clone(),
        bindings,
        steps,
        answer_var,
    })
}

/// Placeholder right after the last "answer is" in the trace's text.
pub fn stated_answer(trace: &Trace) -> Option<Placeholder> {
    trace.segments().iter().rev().find_map(|seg| match seg {
        Segment::Text(t) => {
            let at = t.to_ascii_lowercase().rfind("answer is")?;
            placeholder_refs(&t[at..]).first().map(|(_, p)| *p)
        }
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::{parse_trace, BinOp, Expr};

    fn y(k: u32) -> Placeholder {
        Placeholder(k)
    }

    fn d(lhs: Expr, k: u32) -> Derivation {
        Derivation { lhs, result: y(k) }
    }

    fn math(src: &str) -> Trace {
        parse_trace(src, Domain::Math).unwrap()
    }

    #[test]
    fn two_equation_system() {
        let t = math("[20 + 35 = y1] then [90 - y1 = y2]. The answer is y2.");
        let sys = EquationSystem::from_trace(&t).unwrap();
        assert_eq!(sys.edges(), vec![(y(2), y(1))]);
        let b = solve(&sys).unwrap();
        assert_eq!(b[&y(1)], Value::from_integer(55));
        assert_eq!(b[&y(2)], Value::from_integer(35));
        let r = reify_math(&t).unwrap();
        assert_eq!(r.final_answer(), Some(&Value::from_integer(35)));
        assert_eq!(
            r.text().unwrap(),
            "[20 + 35 = 55] then [90 - 55 = 35]. The answer is 35."
        );
    }

    #[test]
    fn fractions_stay_exact() {
        let t = math("[3/5 * 90 = y1] [1/2 * y1 = y2] [1/3 * y2 = y3]. The answer is y3.");
        let b = solve(&EquationSystem::from_trace(&t).unwrap()).unwrap();
        assert_eq!(b[&y(1)], Value::from_integer(54));
        assert_eq!(b[&y(2)], Value::from_integer(27));
        assert_eq!(b[&y(3)], Value::from_integer(9));
    }

    #[test]
    fn empty_system() {
        let t = math("nothing to compute");
        assert!(EquationSystem::from_trace(&t).unwrap().is_empty());
        assert_eq!(reify_math(&t).unwrap_err(), MathError::NoFinalAnswer);
    }

    #[test]
    fn answer_falls_back_to_last_derivation() {
        let t = math("[2 * 3 = y1] and [y1 + 1 = y2] done");
        assert_eq!(reify_math(&t).unwrap().answer_var, Some(y(2)));
        let t = math("[2 * 3 = y1] and [y1 + 1 = y2]. The answer is y1.");
        assert_eq!(reify_math(&t).unwrap().final_answer(), Some(&Value::from_integer(6)));
    }

    #[test]
    fn division_by_zero_names_the_derivation() {
        let t = math("[5 - 5 = y1] [3 / y1 = y2]");
        match reify_math(&t).unwrap_err() {
            MathError::DivisionByZero { result, derivation } => {
                assert_eq!(result, y(2));
                assert_eq!(derivation, "3 / y1 = y2");
            }
            e => panic!("{e}"),
        }
    }

    #[test]
    fn cycles_and_redefinitions() {
        let v = |k| Expr::Var(y(k));
        let sys = vec![
            d(Expr::bin(BinOp::Add, v(2), Expr::num(1)), 1),
            d(Expr::bin(BinOp::Add, v(3), Expr::num(1)), 2),
            d(v(1), 3),
        ];
        assert_eq!(
            EquationSystem::new(sys).unwrap_err(),
            MathError::CyclicDependency(vec![y(1), y(2), y(3), y(1)])
        );
        let selfref = vec![d(Expr::bin(BinOp::Add, v(1), Expr::num(1)), 1)];
        assert_eq!(
            EquationSystem::new(selfref).unwrap_err(),
            MathError::CyclicDependency(vec![y(1), y(1)])
        );
        let twice = vec![d(Expr::num(1), 1), d(Expr::num(2), 1)];
        assert_eq!(EquationSystem::new(twice).unwrap_err(), MathError::Redefinition(y(1)));
        let dangling = vec![d(v(4), 1)];
        assert!(matches!(EquationSystem::new(dangling), Err(MathError::Unbound(_))));
    }

    #[test]
    fn out_of_order_derivations_still_solve() {
        let v = |k| Expr::Var(y(k));
        let sys = EquationSystem::new(vec![
            d(Expr::bin(BinOp::Mul, v(1), Expr::num(2)), 2),
            d(Expr::num(21), 1),
        ])
        .unwrap();
        assert_eq!(sys.order().unwrap(), vec![1, 0]);
        assert_eq!(solve(&sys).unwrap()[&y(2)], Value::from_integer(42));
    }

    #[test]
    fn negative_and_fractional_operands_are_grouped() {
        let t = math("[3 - 5 = y1] [10 / 4 = y2] [1 / 3 = y3] [y1 * y3 - y2 = y4]");
        let r = reify_math(&t).unwrap();
        assert_eq!(
            r.text().unwrap(),
            "[3 - 5 = -2] [10 / 4 = 2.5] [1 / 3 = 1/3] [(-2) * (1/3) - 2.5 = -19/6]"
        );
    }
}
