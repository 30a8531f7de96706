//! Algorithmic linear typechecking.
//!
//! The typing rules are nondeterministic in how a context splits across the
//! subterms of an application, conditional, or iterator. Under linearity the
//! split is determined uniquely by free-variable analysis: each piece of the
//! context goes to the unique subterm that uses it. `typecheck` reconstructs
//! those splits and records them in the emitted [`Derivation`], which is what
//! the compiler consumes. `validate` replays the declarative rules over a
//! derivation and serves as an independent oracle.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::ast::{Ctx, Expr, Ty};

/// Which typing rule concluded a derivation node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleTag {
    Var,
    True,
    False,
    Zero,
    Succ,
    Lam,
    App,
    If,
    Iter,
}

impl fmt::Display for RuleTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RuleTag::Var => "var",
            RuleTag::True => "tt",
            RuleTag::False => "ff",
            RuleTag::Zero => "zero",
            RuleTag::Succ => "succ",
            RuleTag::Lam => "lam",
            RuleTag::App => "app",
            RuleTag::If => "if",
            RuleTag::Iter => "iter",
        };
        write!(f, "{}", s)
    }
}

pub const ALL_RULES: [RuleTag; 9] = [
    RuleTag::Var,
    RuleTag::True,
    RuleTag::False,
    RuleTag::Zero,
    RuleTag::Succ,
    RuleTag::Lam,
    RuleTag::App,
    RuleTag::If,
    RuleTag::Iter,
];

/// A typing derivation tree. For `App`, `If`, and `Iter` nodes, `split`
/// records the sub-contexts handed to the children, in child order (for `If`
/// the branch context appears once; both branches share it).
#[derive(Debug, Clone, PartialEq)]
pub struct Derivation {
    pub ctx: Ctx,
    pub expr: Expr,
    pub ty: Ty,
    pub rule: RuleTag,
    pub children: Vec<Derivation>,
    pub split: Vec<Ctx>,
}

impl Derivation {
    pub fn rule_tags(&self) -> Vec<RuleTag> {
        let mut out = vec![self.rule];
        for c in &self.children {
            out.extend(c.rule_tags());
        }
        out
    }

    /// Indented textual rendering of the tree.
    pub fn render(&self) -> String {
        fn go(d: &Derivation, depth: usize, out: &mut String) {
            let indent = "  ".repeat(depth);
            out.push_str(&format!(
                "{}[{}] {} |- {} : {}\n",
                indent,
                d.rule,
                d.ctx,
                crate::ast::pretty(&d.expr),
                d.ty
            ));
            for c in &d.children {
                go(c, depth + 1, out);
            }
        }
        let mut out = String::new();
        go(self, 0, &mut out);
        out
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum TypeError {
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("variable `{0}` used {1} times; linear variables must be used exactly once")]
    NonlinearUse(String, usize),
    #[error("variable `{0}` is never used; linear variables cannot be discarded")]
    UnusedVariable(String),
    #[error("type mismatch: expected {expected}, found {found}")]
    Mismatch { expected: String, found: String },
    #[error("if-branches use different variables ({then_vars:?} vs {else_vars:?})")]
    BranchContextMismatch {
        then_vars: Vec<String>,
        else_vars: Vec<String>,
    },
    #[error("iter count must have type Nat, found {0}")]
    CountNotNat(String),
    #[error("context has duplicate binder names")]
    DuplicateBinders,
}

/// True iff `parts` have pairwise disjoint name domains and their binder sets
/// union to exactly `parent`'s.
pub fn split_ok(parent: &Ctx, parts: &[Ctx]) -> bool {
    let mut seen: BTreeSet<&str> = BTreeSet::new();
    for part in parts {
        for (name, ty) in part.binders() {
            if !seen.insert(name.as_str()) {
                return false;
            }
            if parent.lookup(name) != Some(ty) {
                return false;
            }
        }
    }
    seen.len() == parent.len()
}

/// Decide `ctx |- e : ty` and produce the full derivation.
///
/// `e` must be alpha-renamed (unique binders) and `ctx` duplicate-free.
pub fn typecheck(ctx: &Ctx, e: &Expr) -> Result<Derivation, TypeError> {
    if ctx.has_duplicates() {
        return Err(TypeError::DuplicateBinders);
    }
    let fv = e.linear_uses();
    for (name, _) in ctx.binders() {
        match fv.get(name).copied().unwrap_or(0) {
            0 => return Err(TypeError::UnusedVariable(name.clone())),
            1 => {}
            n => return Err(TypeError::NonlinearUse(name.clone(), n)),
        }
    }
    for name in fv.keys() {
        if !ctx.contains(name) {
            return Err(TypeError::UnboundVariable(name.clone()));
        }
    }
    infer(ctx, e)
}

/// Core inference. Invariant: `ctx` is exactly the set of variables `e` uses,
/// each exactly once (checked at entry by `typecheck` and maintained through
/// the splits below).
fn infer(ctx: &Ctx, e: &Expr) -> Result<Derivation, TypeError> {
    let conclude = |ty: Ty, rule: RuleTag, children: Vec<Derivation>, split: Vec<Ctx>| {
        Derivation {
            ctx: ctx.clone(),
            expr: e.clone(),
            ty,
            rule,
            children,
            split,
        }
    };
    match e {
        Expr::Var(x) => {
            let ty = ctx
                .lookup(x)
                .cloned()
                .ok_or_else(|| TypeError::UnboundVariable(x.clone()))?;
            Ok(conclude(ty, RuleTag::Var, vec![], vec![]))
        }
        Expr::True => Ok(conclude(Ty::Bool, RuleTag::True, vec![], vec![])),
        Expr::False => Ok(conclude(Ty::Bool, RuleTag::False, vec![], vec![])),
        Expr::Zero => Ok(conclude(Ty::Nat, RuleTag::Zero, vec![], vec![])),
        Expr::Succ(inner) => {
            let d = infer(ctx, inner)?;
            if d.ty != Ty::Nat {
                return Err(TypeError::Mismatch {
                    expected: "Nat".to_string(),
                    found: d.ty.to_string(),
                });
            }
            Ok(conclude(Ty::Nat, RuleTag::Succ, vec![d], vec![]))
        }
        Expr::Lam { binder, annot, body } => {
            check_binder_linear(binder, body)?;
            let inner_ctx = ctx.extended(binder, annot.clone());
            let d = infer(&inner_ctx, body)?;
            let ty = Ty::fun(annot.clone(), d.ty.clone());
            Ok(conclude(ty, RuleTag::Lam, vec![d], vec![]))
        }
        Expr::App { fun, arg } => {
            let (ctx1, ctx2) = split_two(ctx, fun, arg)?;
            let d1 = infer(&ctx1, fun)?;
            let d2 = infer(&ctx2, arg)?;
            let (dom, cod) = match &d1.ty {
                Ty::Fn(dom, cod) => ((**dom).clone(), (**cod).clone()),
                other => {
                    return Err(TypeError::Mismatch {
                        expected: "a function type".to_string(),
                        found: other.to_string(),
                    })
                }
            };
            if d2.ty != dom {
                return Err(TypeError::Mismatch {
                    expected: dom.to_string(),
                    found: d2.ty.to_string(),
                });
            }
            Ok(conclude(
                cod,
                RuleTag::App,
                vec![d1, d2],
                vec![ctx1, ctx2],
            ))
        }
        Expr::If { cond, then, els } => {
            let then_fv: Vec<String> = then.linear_uses().into_keys().collect();
            let else_fv: Vec<String> = els.linear_uses().into_keys().collect();
            if then_fv != else_fv {
                return Err(TypeError::BranchContextMismatch {
                    then_vars: then_fv,
                    else_vars: else_fv,
                });
            }
            let (ctx1, ctx2) = split_two(ctx, cond, then)?;
            let d1 = infer(&ctx1, cond)?;
            if d1.ty != Ty::Bool {
                return Err(TypeError::Mismatch {
                    expected: "Bool".to_string(),
                    found: d1.ty.to_string(),
                });
            }
            let d2 = infer(&ctx2, then)?;
            let d3 = infer(&ctx2, els)?;
            if d2.ty != d3.ty {
                return Err(TypeError::Mismatch {
                    expected: d2.ty.to_string(),
                    found: d3.ty.to_string(),
                });
            }
            let ty = d2.ty.clone();
            Ok(conclude(
                ty,
                RuleTag::If,
                vec![d1, d2, d3],
                vec![ctx1, ctx2],
            ))
        }
        Expr::Iter {
            base,
            binder,
            step,
            count,
        } => {
            check_binder_linear(binder, step)?;
            let base_fv = base.linear_uses();
            let step_fv = step.linear_uses();
            let count_fv = count.linear_uses();
            let ctx1 = ctx.restrict_to(|n| base_fv.contains_key(n));
            let ctx2 = ctx.restrict_to(|n| step_fv.contains_key(n) && n != binder);
            let ctx3 = ctx.restrict_to(|n| count_fv.contains_key(n));
            check_disjoint(&[&base_fv, &step_fv, &count_fv])?;
            let d1 = infer(&ctx1, base)?;
            let d2 = infer(&ctx2.extended(binder, d1.ty.clone()), step)?;
            if d2.ty != d1.ty {
                return Err(TypeError::Mismatch {
                    expected: d1.ty.to_string(),
                    found: d2.ty.to_string(),
                });
            }
            let d3 = infer(&ctx3, count)?;
            if d3.ty != Ty::Nat {
                return Err(TypeError::CountNotNat(d3.ty.to_string()));
            }
            let ty = d1.ty.clone();
            Ok(conclude(
                ty,
                RuleTag::Iter,
                vec![d1, d2, d3],
                vec![ctx1, ctx2, ctx3],
            ))
        }
    }
}

fn check_binder_linear(binder: &str, body: &Expr) -> Result<(), TypeError> {
    match body.linear_uses().get(binder).copied().unwrap_or(0) {
        0 => Err(TypeError::UnusedVariable(binder.to_string())),
        1 => Ok(()),
        n => Err(TypeError::NonlinearUse(binder.to_string(), n)),
    }
}

fn check_disjoint(
    sets: &[&std::collections::BTreeMap<String, usize>],
) -> Result<(), TypeError> {
    let mut counts: std::collections::BTreeMap<&str, usize> = Default::default();
    for set in sets {
        for (name, n) in set.iter() {
            *counts.entry(name.as_str()).or_insert(0) += n;
        }
    }
    for (name, n) in counts {
        if n > 1 {
            return Err(TypeError::NonlinearUse(name.to_string(), n));
        }
    }
    Ok(())
}

fn split_two(ctx: &Ctx, left: &Expr, right: &Expr) -> Result<(Ctx, Ctx), TypeError> {
    let lfv = left.linear_uses();
    let rfv = right.linear_uses();
    check_disjoint(&[&lfv, &rfv])?;
    let ctx1 = ctx.restrict_to(|n| lfv.contains_key(n));
    let ctx2 = ctx.restrict_to(|n| rfv.contains_key(n));
    Ok((ctx1, ctx2))
}

/// Replay the declarative rules over a derivation; used as an oracle against
/// `typecheck`.
pub fn validate(d: &Derivation) -> bool {
    match (&d.expr, d.rule) {
        (Expr::Var(x), RuleTag::Var) => {
            d.children.is_empty()
                && d.ctx.len() == 1
                && d.ctx.binders()[0].0 == *x
                && d.ctx.binders()[0].1 == d.ty
        }
        (Expr::True, RuleTag::True) => d.children.is_empty() && d.ctx.is_empty() && d.ty == Ty::Bool,
        (Expr::False, RuleTag::False) => {
            d.children.is_empty() && d.ctx.is_empty() && d.ty == Ty::Bool
        }
        (Expr::Zero, RuleTag::Zero) => d.children.is_empty() && d.ctx.is_empty() && d.ty == Ty::Nat,
        (Expr::Succ(inner), RuleTag::Succ) => {
            d.children.len() == 1 && {
                let c = &d.children[0];
                c.ctx == d.ctx
                    && c.expr == **inner
                    && c.ty == Ty::Nat
                    && d.ty == Ty::Nat
                    && validate(c)
            }
        }
        (Expr::Lam { binder, annot, body }, RuleTag::Lam) => {
            d.children.len() == 1 && {
                let c = &d.children[0];
                c.ctx == d.ctx.extended(binder, annot.clone())
                    && c.expr == **body
                    && d.ty == Ty::fun(annot.clone(), c.ty.clone())
                    && validate(c)
            }
        }
        (Expr::App { fun, arg }, RuleTag::App) => {
            d.children.len() == 2 && d.split.len() == 2 && {
                let (c1, c2) = (&d.children[0], &d.children[1]);
                split_ok(&d.ctx, &d.split)
                    && c1.ctx == d.split[0]
                    && c2.ctx == d.split[1]
                    && c1.expr == **fun
                    && c2.expr == **arg
                    && c1.ty == Ty::fun(c2.ty.clone(), d.ty.clone())
                    && validate(c1)
                    && validate(c2)
            }
        }
        (Expr::If { cond, then, els }, RuleTag::If) => {
            d.children.len() == 3 && d.split.len() == 2 && {
                let (c1, c2, c3) = (&d.children[0], &d.children[1], &d.children[2]);
                split_ok(&d.ctx, &d.split)
                    && c1.ctx == d.split[0]
                    && c2.ctx == d.split[1]
                    && c3.ctx == d.split[1]
                    && c1.expr == **cond
                    && c2.expr == **then
                    && c3.expr == **els
                    && c1.ty == Ty::Bool
                    && c2.ty == d.ty
                    && c3.ty == d.ty
                    && validate(c1)
                    && validate(c2)
                    && validate(c3)
            }
        }
        (
            Expr::Iter {
                base,
                binder,
                step,
                count,
            },
            RuleTag::Iter,
        ) => {
            d.children.len() == 3 && d.split.len() == 3 && {
                let (c1, c2, c3) = (&d.children[0], &d.children[1], &d.children[2]);
                split_ok(&d.ctx, &d.split)
                    && c1.ctx == d.split[0]
                    && c2.ctx == d.split[1].extended(binder, d.ty.clone())
                    && c3.ctx == d.split[2]
                    && c1.expr == **base
                    && c2.expr == **step
                    && c3.expr == **count
                    && c1.ty == d.ty
                    && c2.ty == d.ty
                    && c3.ty == Ty::Nat
                    && validate(c1)
                    && validate(c2)
                    && validate(c3)
            }
        }
        _ => false,
    }
}

/// Exhaustive declarative search: all types derivable for `ctx |- e` when
/// every possible context split is tried. Exponential in the context size;
/// meant for small oracle runs only.
pub fn declarative_types(ctx: &Ctx, e: &Expr) -> Vec<Ty> {
    let mut out = declarative_search(ctx, e);
    out.sort_by_key(|t| t.to_string());
    out.dedup();
    out
}

fn declarative_search(ctx: &Ctx, e: &Expr) -> Vec<Ty> {
    match e {
        Expr::Var(x) => {
            if ctx.len() == 1 && ctx.binders()[0].0 == *x {
                vec![ctx.binders()[0].1.clone()]
            } else {
                vec![]
            }
        }
        Expr::True | Expr::False => {
            if ctx.is_empty() {
                vec![Ty::Bool]
            } else {
                vec![]
            }
        }
        Expr::Zero => {
            if ctx.is_empty() {
                vec![Ty::Nat]
            } else {
                vec![]
            }
        }
        Expr::Succ(inner) => {
            if declarative_search(ctx, inner).contains(&Ty::Nat) {
                vec![Ty::Nat]
            } else {
                vec![]
            }
        }
        Expr::Lam { binder, annot, body } => {
            if ctx.contains(binder) {
                return vec![];
            }
            declarative_search(&ctx.extended(binder, annot.clone()), body)
                .into_iter()
                .map(|cod| Ty::fun(annot.clone(), cod))
                .collect()
        }
        Expr::App { fun, arg } => {
            let mut out = Vec::new();
            for (ctx1, ctx2) in enum_splits2(ctx) {
                for fun_ty in declarative_search(&ctx1, fun) {
                    if let Ty::Fn(dom, cod) = fun_ty {
                        if declarative_search(&ctx2, arg).contains(&dom) {
                            out.push(*cod);
                        }
                    }
                }
            }
            out
        }
        Expr::If { cond, then, els } => {
            let mut out = Vec::new();
            for (ctx1, ctx2) in enum_splits2(ctx) {
                if !declarative_search(&ctx1, cond).contains(&Ty::Bool) {
                    continue;
                }
                for ty in declarative_search(&ctx2, then) {
                    if declarative_search(&ctx2, els).contains(&ty) {
                        out.push(ty);
                    }
                }
            }
            out
        }
        Expr::Iter {
            base,
            binder,
            step,
            count,
        } => {
            let mut out = Vec::new();
            for (ctx1, ctx2, ctx3) in enum_splits3(ctx) {
                if ctx2.contains(binder) {
                    continue;
                }
                if !declarative_search(&ctx3, count).contains(&Ty::Nat) {
                    continue;
                }
                for ty in declarative_search(&ctx1, base) {
                    if declarative_search(&ctx2.extended(binder, ty.clone()), step)
                        .contains(&ty)
                    {
                        out.push(ty);
                    }
                }
            }
            out
        }
    }
}

/// All order-preserving two-way splits of a context.
pub fn enum_splits2(ctx: &Ctx) -> Vec<(Ctx, Ctx)> {
    let n = ctx.len();
    let mut out = Vec::with_capacity(1 << n);
    for mask in 0..(1u32 << n) {
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (i, binder) in ctx.binders().iter().enumerate() {
            if mask & (1 << i) != 0 {
                a.push(binder.clone());
            } else {
                b.push(binder.clone());
            }
        }
        out.push((Ctx::from_binders(a), Ctx::from_binders(b)));
    }
    out
}

/// All order-preserving three-way splits of a context.
pub fn enum_splits3(ctx: &Ctx) -> Vec<(Ctx, Ctx, Ctx)> {
    let n = ctx.len();
    let mut out = Vec::new();
    let total = 3u32.pow(n as u32);
    for mut code in 0..total {
        let mut parts = [Vec::new(), Vec::new(), Vec::new()];
        for binder in ctx.binders() {
            parts[(code % 3) as usize].push(binder.clone());
            code /= 3;
        }
        let [a, b, c] = parts;
        out.push((
            Ctx::from_binders(a),
            Ctx::from_binders(b),
            Ctx::from_binders(c),
        ));
    }
    out
}
