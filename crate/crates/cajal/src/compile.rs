//! Compilation of typing derivations to multilinear maps.
//!
//! A context with k binders compiles to a k-tuple of semantic values
//! ([`Env`]); a derivation `Δ ⊢ e : τ` compiles to a map from such tuples
//! into the denotation of `τ`, linear in each coordinate. The compiler works
//! on derivations rather than bare expressions because each `App`/`If`/`Iter`
//! node must route its environment to the children according to the recorded
//! context split.
//!
//! Clause summary: variables project their slot; `tt`/`ff` are the basis
//! vectors (1,0)/(0,1); `0` is the one-hot sequence at index 0; `succ` is the
//! right shift; lambdas curry the environment into a map value; `if` is a
//! soft branch weighting both compiled branches by the condition vector's
//! components; `iter` sums `count(n) · stepⁿ(base)` over the finite support
//! of the compiled count — the unfolded dynamics of a linear recurrent
//! neuron.

use std::sync::Arc;

use thiserror::Error;

use crate::ast::{Ctx, Expr, Ty};
use crate::semval::{add, scale, MapValue, SemError, SemTy, SemValue};
use crate::typecheck::{typecheck, Derivation, RuleTag, TypeError};

/// A compiled environment: one semantic value per binder of a context.
#[derive(Debug, Clone)]
pub struct Env {
    signature: Ctx,
    values: Vec<SemValue>,
}

#[derive(Debug, Clone, Error)]
pub enum CompileError {
    #[error("environment does not match signature: expected {expected}, found {found}")]
    SignatureMismatch { expected: String, found: String },
    #[error("`{0}` is not part of the environment's signature")]
    NotASubcontext(String),
    #[error("unsupported signature: {0}")]
    UnsupportedSignature(String),
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error(transparent)]
    Type(#[from] TypeError),
}

impl Env {
    /// The unit environment for the empty context.
    pub fn unit() -> Env {
        Env {
            signature: Ctx::empty(),
            values: Vec::new(),
        }
    }

    /// Build an environment, checking each value's shape against the
    /// compiled type of the corresponding binder.
    pub fn new(signature: Ctx, values: Vec<SemValue>) -> Result<Env, CompileError> {
        if signature.len() != values.len() {
            return Err(CompileError::SignatureMismatch {
                expected: format!("{} values for ({})", signature.len(), signature),
                found: format!("{} values", values.len()),
            });
        }
        for ((name, ty), v) in signature.binders().iter().zip(&values) {
            let want = SemTy::of_ty(ty);
            if v.sem_ty() != want {
                return Err(CompileError::SignatureMismatch {
                    expected: format!("{} : {}", name, want),
                    found: v.sem_ty().to_string(),
                });
            }
            v.check_finite()?;
        }
        Ok(Env { signature, values })
    }

    pub fn signature(&self) -> &Ctx {
        &self.signature
    }

    pub fn values(&self) -> &[SemValue] {
        &self.values
    }

    pub fn get(&self, name: &str) -> Option<&SemValue> {
        let i = self.signature.index_of(name);
        if i == 0 {
            None
        } else {
            Some(&self.values[i - 1])
        }
    }

    /// Restriction of the environment to a sub-context: the i-th element of
    /// the result is the element at the index of the target's i-th name in
    /// this environment's signature. The empty target yields the unit
    /// environment.
    pub fn restrict(&self, target: &Ctx) -> Result<Env, CompileError> {
        let mut values = Vec::with_capacity(target.len());
        for (name, _) in target.binders() {
            let v = self
                .get(name)
                .ok_or_else(|| CompileError::NotASubcontext(name.clone()))?;
            values.push(v.clone());
        }
        Ok(Env {
            signature: target.clone(),
            values,
        })
    }

    /// Replace one slot's value, keeping the signature; the new value must
    /// have the slot's compiled type.
    pub fn with_value(&self, name: &str, v: SemValue) -> Result<Env, CompileError> {
        let i = self.signature.index_of(name);
        if i == 0 {
            return Err(CompileError::NotASubcontext(name.to_string()));
        }
        let want = SemTy::of_ty(&self.signature.binders()[i - 1].1);
        if v.sem_ty() != want {
            return Err(CompileError::SignatureMismatch {
                expected: format!("{} : {}", name, want),
                found: v.sem_ty().to_string(),
            });
        }
        let mut values = self.values.clone();
        values[i - 1] = v;
        Ok(Env {
            signature: self.signature.clone(),
            values,
        })
    }

    /// Extend on the right with one binder.
    fn extended(&self, name: &str, ty: Ty, v: SemValue) -> Env {
        let mut values = self.values.clone();
        values.push(v);
        Env {
            signature: self.signature.extended(name, ty),
            values,
        }
    }
}

type RunFn = Arc<dyn Fn(&Env) -> SemValue + Send + Sync>;

/// A compiled program: a multilinear map from environments of `signature`
/// into the denotation of the source type.
#[derive(Clone)]
pub struct CompiledProgram {
    pub signature: Ctx,
    pub source_ty: Ty,
    pub result: SemTy,
    run: RunFn,
}

impl std::fmt::Debug for CompiledProgram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "CompiledProgram(({}) -> {})", self.signature, self.result)
    }
}

/// Compile a typing derivation to a multilinear map.
pub fn compile(d: &Derivation) -> CompiledProgram {
    let run = compile_run(d);
    CompiledProgram {
        signature: d.ctx.clone(),
        source_ty: d.ty.clone(),
        result: SemTy::of_ty(&d.ty),
        run,
    }
}

/// Typecheck and compile in one step.
pub fn compile_expr(ctx: &Ctx, e: &Expr) -> Result<CompiledProgram, CompileError> {
    Ok(compile(&typecheck(ctx, e)?))
}

/// Apply a compiled program to an environment. Rejects environments of the
/// wrong signature and non-finite results.
pub fn link(p: &CompiledProgram, env: &Env) -> Result<SemValue, CompileError> {
    if env.signature != p.signature {
        return Err(CompileError::SignatureMismatch {
            expected: format!("({})", p.signature),
            found: format!("({})", env.signature),
        });
    }
    let out = (p.run)(env);
    out.check_finite()?;
    Ok(out)
}

fn compile_run(d: &Derivation) -> RunFn {
    match (d.rule, &d.expr) {
        (RuleTag::Var, Expr::Var(x)) => {
            let x = x.clone();
            Arc::new(move |env: &Env| {
                env.get(&x).expect("signature checked at link").clone()
            })
        }
        (RuleTag::True, _) => Arc::new(|_| SemValue::Vec2(1.0, 0.0)),
        (RuleTag::False, _) => Arc::new(|_| SemValue::Vec2(0.0, 1.0)),
        (RuleTag::Zero, _) => Arc::new(|_| SemValue::one_hot(0)),
        (RuleTag::Succ, _) => {
            let inner = compile_run(&d.children[0]);
            Arc::new(move |env: &Env| right_shift(&inner(env)))
        }
        (RuleTag::Lam, Expr::Lam { binder, annot, .. }) => {
            let body = compile_run(&d.children[0]);
            let binder = binder.clone();
            let annot = annot.clone();
            let dom = SemTy::of_ty(&annot);
            let cod = SemTy::of_ty(match &d.ty {
                Ty::Fn(_, cod) => cod,
                _ => unreachable!("lambda types as a function"),
            });
            Arc::new(move |env: &Env| {
                let env = env.clone();
                let body = body.clone();
                let binder = binder.clone();
                let annot = annot.clone();
                SemValue::Map(MapValue::new(dom.clone(), cod.clone(), move |x| {
                    body(&env.extended(&binder, annot.clone(), x.clone()))
                }))
            })
        }
        (RuleTag::App, _) => {
            let fun = compile_run(&d.children[0]);
            let arg = compile_run(&d.children[1]);
            let (ctx1, ctx2) = (d.split[0].clone(), d.split[1].clone());
            Arc::new(move |env: &Env| {
                let env1 = env.restrict(&ctx1).expect("split is a sub-context");
                let env2 = env.restrict(&ctx2).expect("split is a sub-context");
                match fun(&env1) {
                    SemValue::Map(m) => {
                        m.apply(&arg(&env2)).expect("argument type checked")
                    }
                    _ => unreachable!("function position compiles to a map"),
                }
            })
        }
        (RuleTag::If, _) => {
            let cond = compile_run(&d.children[0]);
            let then = compile_run(&d.children[1]);
            let els = compile_run(&d.children[2]);
            let (ctx1, ctx2) = (d.split[0].clone(), d.split[1].clone());
            Arc::new(move |env: &Env| {
                let env1 = env.restrict(&ctx1).expect("split is a sub-context");
                let env2 = env.restrict(&ctx2).expect("split is a sub-context");
                let (a1, a2) = match cond(&env1) {
                    SemValue::Vec2(a1, a2) => (a1, a2),
                    _ => unreachable!("condition compiles to a 2-vector"),
                };
                let t = scale(a1, &then(&env2));
                let f = scale(a2, &els(&env2));
                add(&t, &f).expect("branches share a type")
            })
        }
        (RuleTag::Iter, Expr::Iter { binder, .. }) => {
            let base = compile_run(&d.children[0]);
            let step = compile_run(&d.children[1]);
            let count = compile_run(&d.children[2]);
            let (ctx1, ctx2, ctx3) =
                (d.split[0].clone(), d.split[1].clone(), d.split[2].clone());
            let binder = binder.clone();
            let elem_ty = d.ty.clone();
            let result = SemTy::of_ty(&d.ty);
            Arc::new(move |env: &Env| {
                let env1 = env.restrict(&ctx1).expect("split is a sub-context");
                let env2 = env.restrict(&ctx2).expect("split is a sub-context");
                let env3 = env.restrict(&ctx3).expect("split is a sub-context");
                let support = match count(&env3) {
                    SemValue::Seq(entries) => entries,
                    _ => unreachable!("count compiles to a sequence"),
                };
                // Walk the states base, step(base), step²(base), … once,
                // picking up each supported power as it goes by.
                let mut acc = SemValue::zero(&result);
                let mut state = base(&env1);
                let mut reached = 0u64;
                for (n, c) in support {
                    while reached < n {
                        state = step(&env2.extended(&binder, elem_ty.clone(), state));
                        reached += 1;
                    }
                    acc = add(&acc, &scale(c, &state)).expect("states share a type");
                }
                acc
            })
        }
        _ => unreachable!("rule tag matches expression shape on valid derivations"),
    }
}

fn right_shift(v: &SemValue) -> SemValue {
    match v {
        SemValue::Seq(entries) => {
            SemValue::Seq(entries.iter().map(|(i, c)| (i + 1, *c)).collect())
        }
        _ => unreachable!("succ compiles over sequences"),
    }
}

/// Dense matrix of a compiled program with exactly one base-type binder and
/// base result type: column j is the program linked with the j-th basis
/// vector of the binder's space (sequence spaces truncated to `trunc`).
pub fn matrix_of(
    p: &CompiledProgram,
    trunc: usize,
) -> Result<(usize, usize, Vec<f64>), CompileError> {
    if p.signature.len() != 1 {
        return Err(CompileError::UnsupportedSignature(format!(
            "expected exactly one binder, found {}",
            p.signature.len()
        )));
    }
    let (_, binder_ty) = &p.signature.binders()[0];
    let dom = SemTy::of_ty(binder_ty);
    let cols = dom
        .base_dim(trunc)
        .ok_or_else(|| CompileError::UnsupportedSignature(format!("binder of type {}", binder_ty)))?;
    let rows = p
        .result
        .base_dim(trunc)
        .ok_or_else(|| CompileError::UnsupportedSignature(format!("result of type {}", p.result)))?;
    let mut data = vec![0.0; rows * cols];
    for (j, e) in SemValue::basis(&dom, trunc).into_iter().enumerate() {
        let env = Env::new(p.signature.clone(), vec![e])?;
        let col = link(p, &env)?.base_coords(rows);
        for (i, x) in col.iter().enumerate() {
            data[i * cols + j] = *x;
        }
    }
    Ok((rows, cols, data))
}

/// Decode an environment from JSON of the form
/// `{"bindings": [{"name": …, "type": …, "value": …}, …]}`, where `type` is
/// concrete type syntax and `value` uses the value encoding of
/// [`crate::semval::from_json`].
pub fn env_from_json(j: &serde_json::Value) -> Result<Env, String> {
    let bindings = j
        .get("bindings")
        .and_then(|b| b.as_array())
        .ok_or("missing \"bindings\" array")?;
    let mut binders = Vec::new();
    let mut values = Vec::new();
    for b in bindings {
        let name = b
            .get("name")
            .and_then(|n| n.as_str())
            .ok_or("binding missing \"name\"")?
            .to_string();
        let ty_src = b
            .get("type")
            .and_then(|t| t.as_str())
            .ok_or("binding missing \"type\"")?;
        let ty = crate::ast::parse_ty(ty_src).map_err(|e| format!("type of {}: {}", name, e))?;
        let value = b.get("value").ok_or("binding missing \"value\"")?;
        let v = crate::semval::from_json(value, &SemTy::of_ty(&ty))
            .map_err(|e| format!("value of {}: {}", name, e))?;
        binders.push((name, ty));
        values.push(v);
    }
    Env::new(Ctx::from_binders(binders), values).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse;
    use crate::eval::{eval, EvalBudget};
    use crate::semval::{power_apply, sem_eq};

    fn ctx(binders: &[(&str, Ty)]) -> Ctx {
        Ctx::from_binders(
            binders
                .iter()
                .map(|(n, t)| (n.to_string(), t.clone()))
                .collect(),
        )
    }

    fn compile_closed(src: &str) -> SemValue {
        let p = compile_expr(&Ctx::empty(), &parse(src).unwrap()).unwrap();
        link(&p, &Env::unit()).unwrap()
    }

    fn compile_open(src: &str, c: &Ctx, values: Vec<SemValue>) -> SemValue {
        let p = compile_expr(c, &parse(src).unwrap()).unwrap();
        link(&p, &Env::new(c.clone(), values).unwrap()).unwrap()
    }

    #[test]
    fn numerals_are_one_hot() {
        assert!(sem_eq(&compile_closed("succ (succ 0)"), &SemValue::one_hot(2)));
        assert!(sem_eq(&compile_closed("0"), &SemValue::one_hot(0)));
    }

    #[test]
    fn succ_is_right_shift() {
        let c = ctx(&[("x", Ty::Nat)]);
        let out = compile_open(
            "succ x",
            &c,
            vec![SemValue::seq(vec![(0, 10.0), (1, 20.0), (2, 30.0)])],
        );
        assert!(sem_eq(
            &out,
            &SemValue::seq(vec![(1, 10.0), (2, 20.0), (3, 30.0)])
        ));
    }

    #[test]
    fn soft_branching_not() {
        let c = ctx(&[("x", Ty::Bool)]);
        // (α1, α2) ↦ α1·(0,1) + α2·(1,0)
        let out = compile_open("if x then ff else tt", &c, vec![SemValue::Vec2(0.3, 0.8)]);
        assert!(sem_eq(&out, &SemValue::Vec2(0.8, 0.3)));
        let out = compile_open("if x then ff else tt", &c, vec![SemValue::Vec2(1.0, 0.0)]);
        assert!(sem_eq(&out, &SemValue::Vec2(0.0, 1.0)));
        let out = compile_open("if x then ff else tt", &c, vec![SemValue::Vec2(0.0, 1.0)]);
        assert!(sem_eq(&out, &SemValue::Vec2(1.0, 0.0)));
    }

    #[test]
    fn iterated_not_denotes_tt() {
        let out = compile_closed("iter tt {x -> if x then ff else tt} 2");
        assert!(sem_eq(&out, &SemValue::Vec2(1.0, 0.0)));
        let odd = compile_closed("iter tt {x -> if x then ff else tt} 3");
        assert!(sem_eq(&odd, &SemValue::Vec2(0.0, 1.0)));
    }

    #[test]
    fn application_splits_environment() {
        let c = ctx(&[("y", Ty::Nat)]);
        let y = SemValue::seq(vec![(0, 1.5), (3, -2.0)]);
        let out = compile_open("(\\x:Nat. succ x) y", &c, vec![y.clone()]);
        assert!(sem_eq(&out, &right_shift(&y)));
    }

    #[test]
    fn restrict_examples() {
        let c = ctx(&[("x", Ty::Bool), ("y", Ty::Nat)]);
        let env = Env::new(
            c.clone(),
            vec![SemValue::Vec2(1.0, 2.0), SemValue::one_hot(0)],
        )
        .unwrap();
        let only_y = env.restrict(&ctx(&[("y", Ty::Nat)])).unwrap();
        assert_eq!(only_y.values().len(), 1);
        assert!(sem_eq(&only_y.values()[0], &SemValue::one_hot(0)));
        let unit = env.restrict(&Ctx::empty()).unwrap();
        assert!(unit.values().is_empty());
        assert!(env.restrict(&ctx(&[("z", Ty::Bool)])).is_err());
    }

    #[test]
    fn matrix_fixtures() {
        let not = compile_expr(
            &ctx(&[("x", Ty::Bool)]),
            &parse("if x then ff else tt").unwrap(),
        )
        .unwrap();
        assert_eq!(matrix_of(&not, 2).unwrap(), (2, 2, vec![0.0, 1.0, 1.0, 0.0]));

        let shift = compile_expr(&ctx(&[("x", Ty::Nat)]), &parse("succ x").unwrap()).unwrap();
        let (rows, cols, data) = matrix_of(&shift, 4).unwrap();
        assert_eq!((rows, cols), (4, 4));
        #[rustfmt::skip]
        let expected = vec![
            0.0, 0.0, 0.0, 0.0,
            1.0, 0.0, 0.0, 0.0,
            0.0, 1.0, 0.0, 0.0,
            0.0, 0.0, 1.0, 0.0,
        ];
        assert_eq!(data, expected);

        let id = compile_expr(&ctx(&[("x", Ty::Bool)]), &parse("x").unwrap()).unwrap();
        assert_eq!(matrix_of(&id, 2).unwrap(), (2, 2, vec![1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn iter_collapses_to_power_on_one_hot_counts() {
        for k in 0..=10u64 {
            let src = format!("iter 0 {{y -> succ (succ y)}} {}", k);
            let via_iter = compile_closed(&src);
            let step = match compile_closed("\\y:Nat. succ (succ y)") {
                SemValue::Map(m) => m,
                _ => panic!(),
            };
            let direct = power_apply(&step, k, &SemValue::one_hot(0)).unwrap();
            assert!(sem_eq(&via_iter, &direct), "k={}", k);
        }
    }

    #[test]
    fn iter_is_linear_in_the_count() {
        // fractional counts blend the powers
        let c = ctx(&[("n", Ty::Nat)]);
        let n = SemValue::seq(vec![(0, 0.25), (2, 0.75)]);
        let out = compile_open(
            "iter tt {x -> if x then ff else tt} n",
            &c,
            vec![n],
        );
        // 0.25·tt + 0.75·not²(tt) = 1.0·tt
        assert!(sem_eq(&out, &SemValue::Vec2(1.0, 0.0)));
    }

    #[test]
    fn agreement_with_evaluation_on_fixtures() {
        for src in [
            "iter 0 {y -> succ (succ y)} (succ 0)",
            "iter tt {x -> if x then ff else tt} 2",
            "(\\x:Bool. if x then ff else tt) tt",
            "if tt then (if ff then 3 else 4) else 0",
            "(\\f:Nat -o Nat. f 2) (\\x:Nat. succ x)",
        ] {
            let e = parse(src).unwrap();
            let v = eval(&e, EvalBudget::default()).unwrap();
            let de = compile_closed(src);
            let dv = compile_closed(&crate::ast::pretty(&v));
            assert!(sem_eq(&de, &dv), "{}", src);
        }
    }

    #[test]
    fn link_rejects_wrong_signature() {
        let p = compile_expr(&ctx(&[("x", Ty::Bool)]), &parse("x").unwrap()).unwrap();
        assert!(link(&p, &Env::unit()).is_err());
        assert!(Env::new(ctx(&[("x", Ty::Bool)]), vec![SemValue::one_hot(0)]).is_err());
    }
}
