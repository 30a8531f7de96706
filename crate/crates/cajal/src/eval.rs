//! Big-step call-by-value evaluation of closed expressions.
//!
//! Evaluation is substitution-based and follows the evaluation rules
//! directly: values self-evaluate, `succ` is congruent, application is
//! call-by-value beta reduction, `if` dispatches on `tt`/`ff`, and `iter`
//! peels one successor off its count per recursive call.

use thiserror::Error;

use crate::ast::Expr;

/// Step budget guarding against nontermination. Well-typed programs always
/// terminate, so exhausting the budget signals a typechecker bug upstream.
#[derive(Debug, Clone, Copy)]
pub struct EvalBudget {
    pub max_steps: u64,
}

impl Default for EvalBudget {
    fn default() -> Self {
        EvalBudget { max_steps: 1_000_000 }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("evaluation budget exceeded")]
    BudgetExceeded,
    #[error("stuck term: {0}")]
    StuckTerm(String),
}

/// Capture-avoiding substitution of a closed value `v` for `name` in `e`.
///
/// Since `v` is closed, no capture is possible and no renaming is needed.
pub fn subst(e: &Expr, name: &str, v: &Expr) -> Expr {
    match e {
        Expr::Var(x) => {
            if x == name {
                v.clone()
            } else {
                e.clone()
            }
        }
        Expr::True | Expr::False | Expr::Zero => e.clone(),
        Expr::Succ(inner) => Expr::succ(subst(inner, name, v)),
        Expr::Lam { binder, annot, body } => {
            if binder == name {
                e.clone()
            } else {
                Expr::Lam {
                    binder: binder.clone(),
                    annot: annot.clone(),
                    body: Box::new(subst(body, name, v)),
                }
            }
        }
        Expr::Iter {
            base,
            binder,
            step,
            count,
        } => Expr::Iter {
            base: Box::new(subst(base, name, v)),
            binder: binder.clone(),
            step: if binder == name {
                step.clone()
            } else {
                Box::new(subst(step, name, v))
            },
            count: Box::new(subst(count, name, v)),
        },
        Expr::App { fun, arg } => Expr::app(subst(fun, name, v), subst(arg, name, v)),
        Expr::If { cond, then, els } => Expr::ite(
            subst(cond, name, v),
            subst(then, name, v),
            subst(els, name, v),
        ),
    }
}

/// Evaluate a closed expression to a value.
pub fn eval(e: &Expr, budget: EvalBudget) -> Result<Expr, EvalError> {
    let mut steps = budget.max_steps;
    eval_inner(e, &mut steps)
}

fn eval_inner(e: &Expr, steps: &mut u64) -> Result<Expr, EvalError> {
    if *steps == 0 {
        return Err(EvalError::BudgetExceeded);
    }
    *steps -= 1;
    match e {
        Expr::True | Expr::False | Expr::Zero | Expr::Lam { .. } => Ok(e.clone()),
        Expr::Var(x) => Err(EvalError::StuckTerm(format!("free variable `{}`", x))),
        Expr::Succ(inner) => {
            let v = eval_inner(inner, steps)?;
            Ok(Expr::succ(v))
        }
        Expr::App { fun, arg } => {
            let vf = eval_inner(fun, steps)?;
            let va = eval_inner(arg, steps)?;
            match vf {
                Expr::Lam { binder, body, .. } => eval_inner(&subst(&body, &binder, &va), steps),
                other => Err(EvalError::StuckTerm(format!(
                    "applied non-function `{}`",
                    crate::ast::pretty(&other)
                ))),
            }
        }
        Expr::If { cond, then, els } => match eval_inner(cond, steps)? {
            Expr::True => eval_inner(then, steps),
            Expr::False => eval_inner(els, steps),
            other => Err(EvalError::StuckTerm(format!(
                "if-condition evaluated to `{}`",
                crate::ast::pretty(&other)
            ))),
        },
        Expr::Iter {
            base,
            binder,
            step,
            count,
        } => match eval_inner(count, steps)? {
            Expr::Zero => eval_inner(base, steps),
            Expr::Succ(pred) => {
                let smaller = Expr::Iter {
                    base: base.clone(),
                    binder: binder.clone(),
                    step: step.clone(),
                    count: pred,
                };
                let vn = eval_inner(&smaller, steps)?;
                eval_inner(&subst(step, binder, &vn), steps)
            }
            other => Err(EvalError::StuckTerm(format!(
                "iter count evaluated to `{}`",
                crate::ast::pretty(&other)
            ))),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::{parse, pretty, Expr};

    fn run(src: &str) -> Expr {
        eval(&parse(src).unwrap(), EvalBudget::default()).unwrap()
    }

    #[test]
    fn subst_examples() {
        let e = Expr::succ(Expr::succ(Expr::var("y")));
        assert_eq!(
            subst(&e, "y", &Expr::Zero),
            Expr::succ(Expr::succ(Expr::Zero))
        );
        assert_eq!(subst(&Expr::var("x"), "x", &Expr::True), Expr::True);
        let lam = parse("\\z:Bool. z").unwrap();
        assert_eq!(subst(&lam, "x", &Expr::True), lam);
    }

    #[test]
    fn doubling_iterator() {
        assert_eq!(run("iter 0 {y -> succ (succ y)} (succ 0)"), Expr::numeral(2));
    }

    #[test]
    fn iterated_not() {
        assert_eq!(run("iter tt {x -> if x then ff else tt} 2"), Expr::True);
    }

    #[test]
    fn beta_then_if() {
        assert_eq!(run("(\\x:Bool. if x then ff else tt) tt"), Expr::False);
    }

    #[test]
    fn values_self_evaluate() {
        assert_eq!(run("tt"), Expr::True);
        let lam = parse("\\x:Nat. succ x").unwrap();
        assert_eq!(eval(&lam, EvalBudget::default()).unwrap(), lam);
    }

    #[test]
    fn determinism() {
        let e = parse("iter 1 {y -> succ (succ y)} 5").unwrap();
        let a = eval(&e, EvalBudget::default()).unwrap();
        let b = eval(&e, EvalBudget::default()).unwrap();
        assert_eq!(a, b);
        assert_eq!(pretty(&a), "11");
    }

    #[test]
    fn budget_exceeded_is_signalled() {
        let e = parse("iter 0 {y -> succ y} 50").unwrap();
        assert_eq!(
            eval(&e, EvalBudget { max_steps: 10 }),
            Err(EvalError::BudgetExceeded)
        );
    }

    #[test]
    fn iterator_matches_hand_unrolled_substitution() {
        // independent oracle: k-fold substitution chain
        for k in 0..=12u64 {
            let src = format!("iter 0 {{y -> succ (succ y)}} {}", k);
            let via_iter = run(&src);
            let step = parse("succ (succ y)").unwrap();
            let mut acc = Expr::Zero;
            for _ in 0..k {
                acc = eval(&subst(&step, "y", &acc), EvalBudget::default()).unwrap();
            }
            assert_eq!(via_iter, acc, "k={}", k);
        }
    }
}
