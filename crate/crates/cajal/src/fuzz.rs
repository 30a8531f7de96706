//! Random generation of well-typed programs and the differential oracle
//! comparing the evaluator against the compiler.
//!
//! Linearity makes generate-then-filter hopeless (a random tree almost never
//! uses each variable exactly once), so generation is type- and
//! context-directed: each recursive call receives the exact set of variables
//! it must consume and a target type, splits the context randomly at `App` /
//! `If` / `Iter` nodes exactly as the typing rules do, and backtracks when a
//! branch cannot be completed. Every emitted program typechecks by
//! construction (and is re-checked anyway).

use std::collections::BTreeMap;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::ast::{pretty, Ctx, Expr, Ty};
use crate::compile::{compile, link, Env};
use crate::eval::{eval, EvalBudget, EvalError};
use crate::semval::{approx_eq, SemValue};
use crate::typecheck::{typecheck, RuleTag, ALL_RULES};

/// Configuration for the program generator.
#[derive(Debug, Clone)]
pub struct GenConfig {
    pub seed: u64,
    pub max_depth: usize,
    pub max_numeral: u64,
    /// Multiplicative weight overrides per rule; unlisted rules use the
    /// built-in defaults. Weights must be nonnegative.
    pub rule_weights: BTreeMap<RuleTag, f64>,
    /// Relative weights for choosing Bool / Nat / first-order function types
    /// where the generator is free to pick (application argument types,
    /// lambda annotations).
    pub type_weights: [f64; 3],
}

impl GenConfig {
    pub fn new(seed: u64) -> GenConfig {
        GenConfig {
            seed,
            max_depth: 6,
            max_numeral: 5,
            rule_weights: BTreeMap::new(),
            type_weights: [4.0, 4.0, 1.0],
        }
    }

    fn weight(&self, tag: RuleTag) -> f64 {
        let default = match tag {
            RuleTag::Var => 3.0,
            RuleTag::True | RuleTag::False | RuleTag::Zero => 1.5,
            RuleTag::Succ => 2.0,
            RuleTag::Lam => 3.0,
            RuleTag::App => 2.5,
            RuleTag::If => 2.5,
            RuleTag::Iter => 2.5,
        };
        self.rule_weights.get(&tag).copied().unwrap_or(default)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GenError {
    #[error("generation failed after bounded backtracking")]
    GenerationFailed,
}

/// A deterministic stream of well-typed programs.
pub struct Generator {
    cfg: GenConfig,
    rng: ChaCha8Rng,
    fresh: usize,
}

/// Node-expansion budget per generated program; exceeding it aborts the
/// attempt (the caller retries with fresh randomness).
const GEN_FUEL: usize = 4_000;

impl Generator {
    pub fn new(cfg: GenConfig) -> Generator {
        let rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        Generator { cfg, rng, fresh: 0 }
    }

    fn fresh_name(&mut self) -> String {
        self.fresh += 1;
        format!("v{}", self.fresh)
    }

    fn pick_ty(&mut self, allow_fn: bool) -> Ty {
        let w = self.cfg.type_weights;
        let total = w[0] + w[1] + if allow_fn { w[2] } else { 0.0 };
        let mut r = self.rng.gen::<f64>() * total;
        if r < w[0] {
            return Ty::Bool;
        }
        r -= w[0];
        if r < w[1] || !allow_fn {
            return Ty::Nat;
        }
        let dom = if self.rng.gen::<bool>() { Ty::Bool } else { Ty::Nat };
        let cod = if self.rng.gen::<bool>() { Ty::Bool } else { Ty::Nat };
        Ty::fun(dom, cod)
    }

    /// Random order-preserving partition of a context into `k` parts.
    fn split(&mut self, ctx: &Ctx, k: usize) -> Vec<Ctx> {
        let mut parts = vec![Vec::new(); k];
        for binder in ctx.binders() {
            parts[self.rng.gen_range(0..k)].push(binder.clone());
        }
        parts.into_iter().map(Ctx::from_binders).collect()
    }

    /// Generate a program with `typecheck(ctx, e) : ty`, consuming exactly
    /// the variables of `ctx`. Retries internally; fails only if the bounded
    /// backtracking budget runs out repeatedly.
    pub fn gen_typed(&mut self, ctx: &Ctx, ty: &Ty) -> Result<Expr, GenError> {
        for _ in 0..64 {
            let mut fuel = GEN_FUEL;
            if let Some(e) = self.gen(ctx, ty, self.cfg.max_depth, &mut fuel) {
                debug_assert!(typecheck(ctx, &e).is_ok(), "generator postcondition");
                return Ok(e);
            }
        }
        Err(GenError::GenerationFailed)
    }

    /// A random closed program of a random base type.
    pub fn closed_base(&mut self) -> Result<(Expr, Ty), GenError> {
        let ty = if self.rng.gen::<bool>() { Ty::Bool } else { Ty::Nat };
        Ok((self.gen_typed(&Ctx::empty(), &ty)?, ty))
    }

    /// A random open program: one to three binders of base or first-order
    /// function type, base result type.
    pub fn open_base(&mut self) -> Result<(Ctx, Expr, Ty), GenError> {
        for _ in 0..64 {
            let n = self.rng.gen_range(1..=3);
            let names = ["x", "y", "z"];
            let binders = (0..n)
                .map(|i| (names[i].to_string(), self.pick_ty(true)))
                .collect();
            let ctx = Ctx::from_binders(binders);
            let ty = if self.rng.gen::<bool>() { Ty::Bool } else { Ty::Nat };
            if let Ok(e) = self.gen_typed(&ctx, &ty) {
                return Ok((ctx, e, ty));
            }
        }
        Err(GenError::GenerationFailed)
    }

    fn gen(&mut self, ctx: &Ctx, ty: &Ty, depth: usize, fuel: &mut usize) -> Option<Expr> {
        if *fuel == 0 {
            return None;
        }
        *fuel -= 1;

        // Enumerate the feasible candidates with their weights.
        #[derive(Clone)]
        enum Cand {
            Var,
            True,
            False,
            Numeral,
            Succ,
            Lam,
            App(Ty),
            If,
            Iter,
        }
        let mut cands: Vec<(Cand, f64)> = Vec::new();
        if ctx.len() == 1 && ctx.binders()[0].1 == *ty {
            cands.push((Cand::Var, self.cfg.weight(RuleTag::Var)));
        }
        if ctx.is_empty() {
            match ty {
                Ty::Bool => {
                    cands.push((Cand::True, self.cfg.weight(RuleTag::True)));
                    cands.push((Cand::False, self.cfg.weight(RuleTag::False)));
                }
                Ty::Nat => cands.push((Cand::Numeral, self.cfg.weight(RuleTag::Zero))),
                Ty::Fn(..) => {}
            }
        }
        // depth 1 is the leaf-only regime
        if depth > 1 {
            if *ty == Ty::Nat {
                cands.push((Cand::Succ, self.cfg.weight(RuleTag::Succ)));
            }
            if matches!(ty, Ty::Fn(..)) {
                cands.push((Cand::Lam, self.cfg.weight(RuleTag::Lam)));
            }
            // application argument types: free picks plus the domains of
            // context functions that could return `ty`
            let w_app = self.cfg.weight(RuleTag::App);
            if w_app > 0.0 {
                let free = self.pick_ty(depth > 2);
                cands.push((Cand::App(free), w_app));
                for (_, bty) in ctx.binders() {
                    if let Ty::Fn(dom, cod) = bty {
                        if **cod == *ty {
                            cands.push((Cand::App((**dom).clone()), w_app));
                        }
                    }
                }
            }
            cands.push((Cand::If, self.cfg.weight(RuleTag::If)));
            cands.push((Cand::Iter, self.cfg.weight(RuleTag::Iter)));
        }

        // Weighted order without replacement, trying candidates until one
        // completes.
        while !cands.is_empty() {
            let total: f64 = cands.iter().map(|(_, w)| w).sum();
            if total <= 0.0 {
                return None;
            }
            let mut r = self.rng.gen::<f64>() * total;
            let mut idx = 0;
            for (i, (_, w)) in cands.iter().enumerate() {
                if r < *w {
                    idx = i;
                    break;
                }
                r -= w;
                idx = i;
            }
            let (cand, _) = cands.remove(idx);
            let attempt = match cand {
                Cand::Var => Some(Expr::var(&ctx.binders()[0].0)),
                Cand::True => Some(Expr::True),
                Cand::False => Some(Expr::False),
                Cand::Numeral => {
                    Some(Expr::numeral(self.rng.gen_range(0..=self.cfg.max_numeral)))
                }
                Cand::Succ => self
                    .gen(ctx, &Ty::Nat, depth - 1, fuel)
                    .map(Expr::succ),
                Cand::Lam => {
                    let (dom, cod) = match ty {
                        Ty::Fn(dom, cod) => ((**dom).clone(), (**cod).clone()),
                        _ => unreachable!(),
                    };
                    let binder = self.fresh_name();
                    let inner = ctx.extended(&binder, dom.clone());
                    self.gen(&inner, &cod, depth - 1, fuel)
                        .map(|body| Expr::lam(&binder, dom, body))
                }
                Cand::App(arg_ty) => {
                    let parts = self.split(ctx, 2);
                    let fun_ty = Ty::fun(arg_ty.clone(), ty.clone());
                    self.gen(&parts[0], &fun_ty, depth - 1, fuel)
                        .and_then(|fun| {
                            self.gen(&parts[1], &arg_ty, depth - 1, fuel)
                                .map(|arg| Expr::app(fun, arg))
                        })
                }
                Cand::If => {
                    let parts = self.split(ctx, 2);
                    self.gen(&parts[0], &Ty::Bool, depth - 1, fuel)
                        .and_then(|cond| {
                            let then = self.gen(&parts[1], ty, depth - 1, fuel)?;
                            let els = self.gen(&parts[1], ty, depth - 1, fuel)?;
                            Some(Expr::ite(cond, then, els))
                        })
                }
                Cand::Iter => {
                    let parts = self.split(ctx, 3);
                    self.gen(&parts[0], ty, depth - 1, fuel).and_then(|base| {
                        let binder = self.fresh_name();
                        let step_ctx = parts[1].extended(&binder, ty.clone());
                        let step = self.gen(&step_ctx, ty, depth - 1, fuel)?;
                        let count = self.gen(&parts[2], &Ty::Nat, depth - 1, fuel)?;
                        Some(Expr::iter(base, &binder, step, count))
                    })
                }
            };
            if let Some(e) = attempt {
                return Some(e);
            }
        }
        None
    }
}

/// Outcome of one differential trial.
#[derive(Debug, Clone)]
pub enum Verdict {
    Pass {
        denotation: SemValue,
    },
    Fail {
        counterexample: Expr,
        reason: String,
    },
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass { .. })
    }
}

const TOL_REL: f64 = 1e-9;
const TOL_ABS: f64 = 1e-12;

/// Check one closed base-type program: evaluating then compiling must agree
/// with compiling directly (soundness), and the denotation must differ from
/// every other base value's (adequacy). Failures are minimized by greedy
/// subterm shrinking.
pub fn differential_trial(e: &Expr) -> Verdict {
    match check_one(e) {
        Ok(denotation) => Verdict::Pass { denotation },
        Err(reason) => {
            let counterexample = shrink(e.clone(), &reason);
            Verdict::Fail {
                counterexample,
                reason,
            }
        }
    }
}

/// The raw check, without shrinking. `Err` carries the reason.
fn check_one(e: &Expr) -> Result<SemValue, String> {
    let d = typecheck(&Ctx::empty(), e).map_err(|err| format!("ill-typed: {}", err))?;
    if !d.ty.is_base() {
        return Err(format!("non-base type {}", d.ty));
    }
    let v = eval(e, EvalBudget::default()).map_err(|err| match err {
        EvalError::BudgetExceeded => "budget exceeded".to_string(),
        EvalError::StuckTerm(msg) => format!("stuck: {}", msg),
    })?;
    let de = link(&compile(&d), &Env::unit()).map_err(|err| err.to_string())?;
    let dv_deriv =
        typecheck(&Ctx::empty(), &v).map_err(|err| format!("value ill-typed: {}", err))?;
    let dv = link(&compile(&dv_deriv), &Env::unit()).map_err(|err| err.to_string())?;
    if !approx_eq(&de, &dv, TOL_REL, TOL_ABS) {
        return Err(format!(
            "denotation mismatch: program {:?} vs value {:?} ({} ⇓ {})",
            de,
            dv,
            pretty(e),
            pretty(&v)
        ));
    }
    // adequacy: the denotation identifies the value uniquely among values
    match (&d.ty, &de) {
        (Ty::Bool, SemValue::Vec2(..)) => {
            let other = if v == Expr::True {
                SemValue::Vec2(0.0, 1.0)
            } else {
                SemValue::Vec2(1.0, 0.0)
            };
            if approx_eq(&de, &other, TOL_REL, TOL_ABS) {
                return Err(format!(
                    "adequacy violated: {:?} matches the other boolean",
                    de
                ));
            }
        }
        (Ty::Nat, SemValue::Seq(entries)) => {
            let k = v
                .as_numeral()
                .ok_or_else(|| format!("Nat value is not a numeral: {}", pretty(&v)))?;
            let expected = vec![(k, 1.0)];
            if entries != &expected {
                return Err(format!(
                    "adequacy violated: support {:?} is not one-hot at {}",
                    entries, k
                ));
            }
        }
        _ => return Err("value/denotation shape mismatch".to_string()),
    }
    Ok(de)
}

/// Greedy shrinking: repeatedly replace the program by its smallest closed
/// well-typed subterm (of the same type) that still fails for the same class
/// of reason.
fn shrink(mut e: Expr, _reason: &str) -> Expr {
    let ty = match typecheck(&Ctx::empty(), &e) {
        Ok(d) => d.ty,
        Err(_) => return e,
    };
    loop {
        let mut best: Option<Expr> = None;
        for sub in proper_subterms(&e) {
            if !sub.is_closed() {
                continue;
            }
            match typecheck(&Ctx::empty(), &sub) {
                Ok(d) if d.ty == ty => {}
                _ => continue,
            }
            if check_one(&sub).is_err() {
                best = Some(sub);
                break;
            }
        }
        match best {
            Some(smaller) => e = smaller,
            None => return e,
        }
    }
}

fn proper_subterms(e: &Expr) -> Vec<Expr> {
    let mut out = Vec::new();
    fn push_children(e: &Expr, out: &mut Vec<Expr>) {
        match e {
            Expr::Var(_) | Expr::True | Expr::False | Expr::Zero => {}
            Expr::Succ(inner) => out.push((**inner).clone()),
            Expr::Lam { body, .. } => out.push((**body).clone()),
            Expr::App { fun, arg } => {
                out.push((**fun).clone());
                out.push((**arg).clone());
            }
            Expr::If { cond, then, els } => {
                out.push((**cond).clone());
                out.push((**then).clone());
                out.push((**els).clone());
            }
            Expr::Iter {
                base, step, count, ..
            } => {
                out.push((**base).clone());
                out.push((**step).clone());
                out.push((**count).clone());
            }
        }
    }
    // breadth-first so the earliest (largest) candidates come first; the
    // shrinker prefers any failing subterm and iterates
    let mut queue = vec![e.clone()];
    while let Some(cur) = queue.pop() {
        let mut kids = Vec::new();
        push_children(&cur, &mut kids);
        out.extend(kids.iter().cloned());
        queue.extend(kids);
    }
    out
}

/// Aggregate report over a fuzzing run.
#[derive(Debug, Clone)]
pub struct FuzzReport {
    pub trials: usize,
    pub passes: usize,
    pub failures: Vec<(Expr, String)>,
    /// Fraction of generated derivations in which each rule occurs.
    pub rule_coverage: BTreeMap<RuleTag, f64>,
    pub budget_exceeded: usize,
    pub stuck: usize,
}

impl FuzzReport {
    pub fn all_pass(&self) -> bool {
        self.failures.is_empty() && self.passes == self.trials
    }
}

/// Run `trials` differential trials on freshly generated closed base-type
/// programs. Deterministic in `cfg.seed`.
pub fn run_fuzz(cfg: &GenConfig, trials: usize) -> FuzzReport {
    let mut g = Generator::new(cfg.clone());
    let mut passes = 0;
    let mut failures = Vec::new();
    let mut budget_exceeded = 0;
    let mut stuck = 0;
    let mut rule_hits: BTreeMap<RuleTag, usize> =
        ALL_RULES.iter().map(|r| (*r, 0)).collect();
    for _ in 0..trials {
        let (e, _ty) = match g.closed_base() {
            Ok(x) => x,
            Err(err) => {
                failures.push((Expr::Zero, err.to_string()));
                continue;
            }
        };
        let d = typecheck(&Ctx::empty(), &e).expect("generator emits well-typed programs");
        let tags: std::collections::BTreeSet<RuleTag> =
            d.rule_tags().into_iter().collect();
        for t in tags {
            *rule_hits.entry(t).or_insert(0) += 1;
        }
        match differential_trial(&e) {
            Verdict::Pass { .. } => passes += 1,
            Verdict::Fail {
                counterexample,
                reason,
            } => {
                if reason.contains("budget exceeded") {
                    budget_exceeded += 1;
                }
                if reason.contains("stuck") {
                    stuck += 1;
                }
                failures.push((counterexample, reason));
            }
        }
    }
    let rule_coverage = rule_hits
        .into_iter()
        .map(|(r, n)| (r, n as f64 / trials.max(1) as f64))
        .collect();
    FuzzReport {
        trials,
        passes,
        failures,
        rule_coverage,
        budget_exceeded,
        stuck,
    }
}
