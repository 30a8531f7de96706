//! Differentiation of compiled programs, finite-difference verification, the
//! recurrent-unfolding construction of a 2-dimensional linear dynamical
//! system, and a small gradient-descent demo.
//!
//! Compiled programs are linear in every environment slot whose variable is
//! consumed outside of `iter` steps ([`slot_linear`]). For such a slot the
//! derivative of a scalar pairing `⟨c, run(env)⟩` is obtained *exactly* by
//! probing basis vectors — no tape, no approximation — and central finite
//! differences serve as an independent check. Slots consumed inside an
//! `iter` step are excluded: the step map is applied once per unit of the
//! count, so the program is polynomial (not linear) in those slots.

use thiserror::Error;

use crate::ast::{Ctx, Expr, Ty};
use crate::compile::{compile_expr, link, CompileError, CompiledProgram, Env};
use crate::semval::{MapValue, SemError, SemTy, SemValue};

/// A discrete-time 2-dimensional linear dynamical system:
/// `f(0) = init`, `f(n+1) = m · f(n)`.
#[derive(Debug, Clone, Copy)]
pub struct DynSystem {
    pub init: (f64, f64),
    pub m: [[f64; 2]; 2],
}

impl DynSystem {
    pub fn apply(&self, v: (f64, f64)) -> (f64, f64) {
        (
            self.m[0][0] * v.0 + self.m[0][1] * v.1,
            self.m[1][0] * v.0 + self.m[1][1] * v.1,
        )
    }

    /// The running example: init (1,0), transition [[0,2],[3,0]].
    pub fn example() -> DynSystem {
        DynSystem {
            init: (1.0, 0.0),
            m: [[0.0, 2.0], [3.0, 0.0]],
        }
    }

    pub fn transition_map(&self) -> MapValue {
        let data = vec![self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]];
        MapValue::from_matrix(SemTy::VBool, SemTy::VBool, 2, 2, data)
            .expect("2x2 matrix is well-formed")
    }
}

/// The state sequence `[f(0), f(1), …, f(steps)]`.
pub fn unfold(sys: &DynSystem, steps: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(steps + 1);
    let mut cur = sys.init;
    out.push(cur);
    for _ in 0..steps {
        cur = sys.apply(cur);
        out.push(cur);
    }
    out
}

/// The restricted unfolded map `g(x) = Σ_i x_i · f(i)`: a linear read-out
/// over the system's states.
pub fn g_restricted(sys: &DynSystem, x: &[f64]) -> (f64, f64) {
    let states = unfold(sys, x.len().saturating_sub(1));
    let mut out = (0.0, 0.0);
    for (xi, s) in x.iter().zip(states) {
        out.0 += xi * s.0;
        out.1 += xi * s.1;
    }
    out
}

/// A gradient with the shape of the environment slot it was taken in.
#[derive(Debug, Clone, PartialEq)]
pub enum Gradient {
    Vec2(f64, f64),
    Seq(Vec<f64>),
    Matrix {
        rows: usize,
        cols: usize,
        data: Vec<f64>,
    },
}

impl Gradient {
    pub fn entries(&self) -> &[f64] {
        match self {
            Gradient::Vec2(..) => unreachable!("use flat()"),
            Gradient::Seq(v) => v,
            Gradient::Matrix { data, .. } => data,
        }
    }

    /// Flattened entries in probe order.
    pub fn flat(&self) -> Vec<f64> {
        match self {
            Gradient::Vec2(a, b) => vec![*a, *b],
            Gradient::Seq(v) => v.clone(),
            Gradient::Matrix { data, .. } => data.clone(),
        }
    }
}

#[derive(Debug, Clone, Error)]
pub enum DiffError {
    #[error("no binder `{0}` in the program signature")]
    NoSuchBinder(String),
    #[error("unsupported binder for differentiation: {0}")]
    UnsupportedBinder(String),
    #[error("cotangent must be a base value matching the result type; found {0}")]
    BadCotangent(String),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Sem(#[from] SemError),
}

/// True iff the denotation is guaranteed linear in `name`'s slot. `iter`
/// re-applies its step once per count unit, so a slot occurring free in a
/// step is raised to the count's power; that nonlinearity also propagates
/// through beta redexes (a slot flowing into the argument of a lambda whose
/// binder sits in a step) and through iteration states. The analysis is
/// conservative (may answer `false` for a linear slot, never the converse)
/// and assumes environment-level function bindings denote linear maps, which
/// holds for every environment constructible here (matrices).
pub fn slot_linear(e: &Expr, name: &str) -> bool {
    linear_in(e, name, &mut std::collections::BTreeSet::new())
}

/// `bound` holds the lambda-bound function names in scope: unlike
/// environment-level functions they may denote nonlinear operators, so
/// applying one to a slot-dependent argument is not trusted.
fn linear_in(
    e: &Expr,
    name: &str,
    bound: &mut std::collections::BTreeSet<String>,
) -> bool {
    if !e.free_vars().contains_key(name) {
        return true;
    }
    match e {
        Expr::Var(_) | Expr::True | Expr::False | Expr::Zero => true,
        Expr::Succ(inner) => linear_in(inner, name, bound),
        Expr::Lam { binder, body, .. } => {
            let shadowed = bound.insert(binder.clone());
            let r = linear_in(body, name, bound);
            if shadowed {
                bound.remove(binder);
            }
            r
        }
        Expr::App { fun, arg } => {
            let in_arg = arg.free_vars().contains_key(name);
            let in_fun = fun.free_vars().contains_key(name);
            (!in_arg || (linear_in(arg, name, bound) && denotes_linear_map(fun, bound)))
                && (!in_fun || linear_in(fun, name, bound))
        }
        Expr::If { cond, then, els } => {
            linear_in(cond, name, bound)
                && linear_in(then, name, bound)
                && linear_in(els, name, bound)
        }
        Expr::Iter {
            base,
            binder,
            step,
            count,
        } => {
            if binder != name && step.free_vars().contains_key(name) {
                return false;
            }
            if base.free_vars().contains_key(name) {
                // the slot enters through the iteration state, so every step
                // must act linearly on that state
                if !linear_in(base, name, bound) || !linear_in(step, binder, bound) {
                    return false;
                }
            }
            linear_in(count, name, bound)
        }
    }
}

/// Whether an expression in function position is guaranteed to denote a
/// linear map (so applying it to a slot-dependent argument preserves
/// linearity).
fn denotes_linear_map(f: &Expr, bound: &std::collections::BTreeSet<String>) -> bool {
    match f {
        // environment-level functions are matrices; lambda-bound ones are
        // arbitrary program values
        Expr::Var(v) => !bound.contains(v),
        Expr::Lam { binder, body, .. } => {
            let mut inner = bound.clone();
            inner.remove(binder);
            linear_in(body, binder, &mut inner)
        }
        // a soft branch blends two maps with scalar weights
        Expr::If { then, els, .. } => {
            denotes_linear_map(then, bound) && denotes_linear_map(els, bound)
        }
        _ => false,
    }
}

/// Scalar pairing of two base values of the same shape.
pub fn pair(c: &SemValue, v: &SemValue) -> Result<f64, DiffError> {
    match (c, v) {
        (SemValue::Vec2(a1, b1), SemValue::Vec2(a2, b2)) => Ok(a1 * a2 + b1 * b2),
        (SemValue::Seq(e1), SemValue::Seq(_)) => {
            Ok(e1.iter().map(|(i, x)| x * v.seq_at(*i)).sum())
        }
        _ => Err(DiffError::BadCotangent(format!(
            "{} against {}",
            c.sem_ty(),
            v.sem_ty()
        ))),
    }
}

fn slot_ty(p: &CompiledProgram, binder: &str) -> Result<Ty, DiffError> {
    p.signature
        .lookup(binder)
        .cloned()
        .ok_or_else(|| DiffError::NoSuchBinder(binder.to_string()))
}

fn loss(
    p: &CompiledProgram,
    env: &Env,
    cotangent: &SemValue,
) -> Result<f64, DiffError> {
    pair(cotangent, &link(p, env)?)
}

/// Gradient of `⟨cotangent, p.run(env)⟩` with respect to `binder`'s slot,
/// computed by basis probing: entry j is the loss with the slot replaced by
/// the j-th basis vector. Exact because the program is linear in the slot
/// (checked via [`slot_linear`] by callers that generate programs; probing a
/// nonlinear slot gives the polynomial's basis values, not a derivative).
/// `trunc` bounds the probed subspace for sequence and matrix slots.
pub fn grad(
    p: &CompiledProgram,
    env: &Env,
    binder: &str,
    cotangent: &SemValue,
    trunc: usize,
) -> Result<Gradient, DiffError> {
    match slot_ty(p, binder)? {
        Ty::Bool => {
            let mut out = [0.0; 2];
            for (j, e) in SemValue::basis(&SemTy::VBool, 0).into_iter().enumerate() {
                out[j] = loss(p, &env.with_value(binder, e)?, cotangent)?;
            }
            Ok(Gradient::Vec2(out[0], out[1]))
        }
        Ty::Nat => {
            let mut out = Vec::with_capacity(trunc);
            for e in SemValue::basis(&SemTy::VNat, trunc) {
                out.push(loss(p, &env.with_value(binder, e)?, cotangent)?);
            }
            Ok(Gradient::Seq(out))
        }
        Ty::Fn(dom, cod) if dom.is_base() && cod.is_base() => {
            let dom = SemTy::of_ty(&dom);
            let cod = SemTy::of_ty(&cod);
            let cols = dom.base_dim(trunc).expect("base type");
            let rows = cod.base_dim(trunc).expect("base type");
            let mut data = vec![0.0; rows * cols];
            for r in 0..rows {
                for c in 0..cols {
                    let mut unit = vec![0.0; rows * cols];
                    unit[r * cols + c] = 1.0;
                    let probe = SemValue::Map(MapValue::from_matrix(
                        dom.clone(),
                        cod.clone(),
                        rows,
                        cols,
                        unit,
                    )?);
                    data[r * cols + c] =
                        loss(p, &env.with_value(binder, probe)?, cotangent)?;
                }
            }
            Ok(Gradient::Matrix { rows, cols, data })
        }
        other => Err(DiffError::UnsupportedBinder(format!(
            "{} : {}",
            binder, other
        ))),
    }
}

fn slot_coords(v: &SemValue, trunc: usize) -> Result<(Vec<f64>, SlotShape), DiffError> {
    match v {
        SemValue::Vec2(a, b) => Ok((vec![*a, *b], SlotShape::Vec2)),
        SemValue::Seq(_) => Ok((v.base_coords(trunc), SlotShape::Seq)),
        SemValue::Map(m) => {
            let (rows, cols, data) = crate::semval::map_matrix(m, trunc)?;
            Ok((
                data,
                SlotShape::Matrix {
                    rows,
                    cols,
                    dom: m.dom.clone(),
                    cod: m.cod.clone(),
                },
            ))
        }
    }
}

enum SlotShape {
    Vec2,
    Seq,
    Matrix {
        rows: usize,
        cols: usize,
        dom: SemTy,
        cod: SemTy,
    },
}

fn slot_from_coords(shape: &SlotShape, coords: &[f64]) -> Result<SemValue, DiffError> {
    Ok(match shape {
        SlotShape::Vec2 => SemValue::Vec2(coords[0], coords[1]),
        SlotShape::Seq => SemValue::from_base_coords(&SemTy::VNat, coords),
        SlotShape::Matrix {
            rows,
            cols,
            dom,
            cod,
        } => SemValue::Map(MapValue::from_matrix(
            dom.clone(),
            cod.clone(),
            *rows,
            *cols,
            coords.to_vec(),
        )?),
    })
}

/// Verify [`grad`] against central finite differences with step `h`; returns
/// the maximum over coordinates of `|analytic − fd| / max(1, |analytic|)`.
pub fn fd_check(
    p: &CompiledProgram,
    env: &Env,
    binder: &str,
    cotangent: &SemValue,
    trunc: usize,
    h: f64,
) -> Result<f64, DiffError> {
    let analytic = grad(p, env, binder, cotangent, trunc)?.flat();
    let base = env
        .get(binder)
        .ok_or_else(|| DiffError::NoSuchBinder(binder.to_string()))?;
    let (coords, shape) = slot_coords(base, trunc)?;
    let mut max_err: f64 = 0.0;
    for (j, a) in analytic.iter().enumerate() {
        let mut plus = coords.clone();
        let mut minus = coords.clone();
        plus[j] += h;
        minus[j] -= h;
        let lp = loss(p, &env.with_value(binder, slot_from_coords(&shape, &plus)?)?, cotangent)?;
        let lm = loss(p, &env.with_value(binder, slot_from_coords(&shape, &minus)?)?, cotangent)?;
        let fd = (lp - lm) / (2.0 * h);
        max_err = max_err.max((a - fd).abs() / 1.0_f64.max(a.abs()));
    }
    Ok(max_err)
}

/// One gradient-descent run of [`toy_train`].
#[derive(Debug, Clone)]
pub struct TrainResult {
    /// Squared loss after each step (index 0 is the initial loss).
    pub losses: Vec<f64>,
    /// The learned count vector.
    pub count: Vec<f64>,
}

impl TrainResult {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least the initial loss")
    }

    pub fn argmax(&self) -> usize {
        self.count
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Fit the count vector of the compiled program
/// `b:Bool, m:Bool⊸Bool, n:Nat ⊢ iter b {y -> m y} n` so that linking
/// reproduces the system state `f(k)`, by plain gradient descent on the
/// squared error. The program's output is `g(n) = Σ_i n_i · f(i)` — the
/// restricted unfolded map — so the loss is an exact convex quadratic in `n`
/// and the gradient is `2·⟨residual, f(j)⟩` per entry, obtained from [`grad`]
/// with the residual as cotangent.
pub fn toy_train(
    sys: &DynSystem,
    k: usize,
    steps: usize,
    lr: f64,
    trunc: usize,
    init_count: Option<Vec<f64>>,
) -> Result<TrainResult, DiffError> {
    let ctx = Ctx::from_binders(vec![
        ("b".to_string(), Ty::Bool),
        ("m".to_string(), Ty::fun(Ty::Bool, Ty::Bool)),
        ("n".to_string(), Ty::Nat),
    ]);
    let e = crate::ast::parse("iter b {y -> m y} n").expect("fixed program parses");
    let p = compile_expr(&ctx, &e)?;

    let target = unfold(sys, k)[k];
    let mut count = init_count.unwrap_or_else(|| vec![1.0 / trunc as f64; trunc]);
    assert_eq!(count.len(), trunc, "initial count must have trunc entries");

    let mut losses = Vec::with_capacity(steps + 1);
    let mut env = Env::new(
        ctx,
        vec![
            SemValue::Vec2(sys.init.0, sys.init.1),
            SemValue::Map(sys.transition_map()),
            SemValue::from_base_coords(&SemTy::VNat, &count),
        ],
    )?;
    for step in 0..=steps {
        let out = match link(&p, &env)? {
            SemValue::Vec2(a, b) => (a, b),
            _ => unreachable!("result type is Bool"),
        };
        let resid = (out.0 - target.0, out.1 - target.1);
        let l = resid.0 * resid.0 + resid.1 * resid.1;
        if !l.is_finite() {
            // diverged; report the trace so far
            losses.push(l);
            break;
        }
        losses.push(l);
        if step == steps {
            break;
        }
        let g = grad(
            &p,
            &env,
            "n",
            &SemValue::Vec2(resid.0, resid.1),
            trunc,
        )?
        .flat();
        for (c, gj) in count.iter_mut().zip(&g) {
            *c -= lr * 2.0 * gj;
        }
        env = env.with_value("n", SemValue::from_base_coords(&SemTy::VNat, &count))?;
    }
    Ok(TrainResult { losses, count })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ast::parse;
    use crate::semval::sem_eq;

    fn bool_ctx(names: &[&str]) -> Ctx {
        Ctx::from_binders(
            names
                .iter()
                .map(|n| (n.to_string(), Ty::Bool))
                .collect(),
        )
    }

    #[test]
    fn unfold_fixtures() {
        let sys = DynSystem::example();
        assert_eq!(
            unfold(&sys, 3),
            vec![(1.0, 0.0), (0.0, 3.0), (6.0, 0.0), (0.0, 18.0)]
        );
        assert_eq!(unfold(&sys, 0), vec![(1.0, 0.0)]);
        let id = DynSystem {
            init: (2.0, 5.0),
            m: [[1.0, 0.0], [0.0, 1.0]],
        };
        assert_eq!(unfold(&id, 2), vec![(2.0, 5.0); 3]);
    }

    #[test]
    fn g_restricted_fixtures() {
        let sys = DynSystem::example();
        assert_eq!(g_restricted(&sys, &[7.0, 8.0, 9.0]), (61.0, 24.0));
        assert_eq!(g_restricted(&sys, &[1.0, 0.0, 0.0]), (1.0, 0.0));
        assert_eq!(g_restricted(&sys, &[0.0, 0.0, 1.0]), (6.0, 0.0));
        // one-hots reproduce each unfolded state exactly
        let states = unfold(&sys, 8);
        for i in 0..=8 {
            let mut x = vec![0.0; i + 1];
            x[i] = 1.0;
            assert_eq!(g_restricted(&sys, &x), states[i], "state {}", i);
        }
    }

    #[test]
    fn g_restricted_is_linear() {
        let sys = DynSystem::example();
        let x = [0.5, -1.0, 2.0];
        let y = [1.0, 0.25, -0.5];
        let (a, b) = (3.0, -2.0);
        let mixed: Vec<f64> = x.iter().zip(&y).map(|(xi, yi)| a * xi + b * yi).collect();
        let gx = g_restricted(&sys, &x);
        let gy = g_restricted(&sys, &y);
        let gm = g_restricted(&sys, &mixed);
        assert!((gm.0 - (a * gx.0 + b * gy.0)).abs() < 1e-12);
        assert!((gm.1 - (a * gx.1 + b * gy.1)).abs() < 1e-12);
    }

    #[test]
    fn unfolding_bridges_to_compiled_iteration() {
        // with the swap transition, g over the system equals the compiled
        // iterated-not program linked with the same count vector
        let sys = DynSystem {
            init: (1.0, 0.0),
            m: [[0.0, 1.0], [1.0, 0.0]],
        };
        let ctx = Ctx::from_binders(vec![("n".to_string(), Ty::Nat)]);
        let p = compile_expr(&ctx, &parse("iter tt {x -> if x then ff else tt} n").unwrap())
            .unwrap();
        for x in [
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
            vec![7.0, 8.0, 9.0],
            vec![0.25, -1.5, 3.0],
        ] {
            let g = g_restricted(&sys, &x);
            let env = Env::new(
                ctx.clone(),
                vec![SemValue::from_base_coords(&SemTy::VNat, &x)],
            )
            .unwrap();
            let linked = link(&p, &env).unwrap();
            assert!(sem_eq(&linked, &SemValue::Vec2(g.0, g.1)), "{:?}", x);
        }
    }

    #[test]
    fn slot_linear_examples() {
        let e = parse("iter tt {y -> m y} n").unwrap();
        assert!(!slot_linear(&e, "m"));
        assert!(slot_linear(&e, "n"));
        let e = parse("if x then ff else tt").unwrap();
        assert!(slot_linear(&e, "x"));
        let e = parse("iter x {y -> succ y} 2").unwrap();
        assert!(slot_linear(&e, "x"));
    }

    #[test]
    fn iter_step_slots_are_genuinely_nonlinear() {
        // the step environment is reused at every count unit, so the
        // program is quadratic (not linear) in `m` when the count is 2
        let ctx = Ctx::from_binders(vec![(
            "m".to_string(),
            Ty::fun(Ty::Bool, Ty::Bool),
        )]);
        let p = compile_expr(&ctx, &parse("iter tt {y -> m y} 2").unwrap()).unwrap();
        let run = |mat: Vec<f64>| {
            let m = SemValue::Map(
                MapValue::from_matrix(SemTy::VBool, SemTy::VBool, 2, 2, mat).unwrap(),
            );
            link(&p, &Env::new(ctx.clone(), vec![m]).unwrap()).unwrap()
        };
        // A = swap, B = projection onto the first axis
        let sum = run(vec![1.0, 1.0, 1.0, 0.0]); // (A+B)² at tt = (2,1)
        let a = run(vec![0.0, 1.0, 1.0, 0.0]); // A² at tt = (1,0)
        let b = run(vec![1.0, 0.0, 0.0, 0.0]); // B² at tt = (1,0)
        let pointwise = crate::semval::add(&a, &b).unwrap();
        assert!(!sem_eq(&sum, &pointwise));
    }

    #[test]
    fn grad_fixtures() {
        // not program: loss = ⟨(1,0), (α2, α1)⟩ = α2, so ∇ = (0,1)
        let ctx = bool_ctx(&["x"]);
        let p = compile_expr(&ctx, &parse("if x then ff else tt").unwrap()).unwrap();
        let env = Env::new(ctx.clone(), vec![SemValue::Vec2(0.3, 0.7)]).unwrap();
        let g = grad(&p, &env, "x", &SemValue::Vec2(1.0, 0.0), 0).unwrap();
        assert_eq!(g, Gradient::Vec2(0.0, 1.0));

        // identity program: gradient equals the cotangent
        let p = compile_expr(&ctx, &parse("x").unwrap()).unwrap();
        let g = grad(&p, &env, "x", &SemValue::Vec2(2.5, -1.0), 0).unwrap();
        assert_eq!(g, Gradient::Vec2(2.5, -1.0));

        // iterated not over a free count: entry j = π₁(notʲ(tt)) = 1,0,1,0
        let ctx = Ctx::from_binders(vec![("n".to_string(), Ty::Nat)]);
        let p = compile_expr(
            &ctx,
            &parse("iter tt {x -> if x then ff else tt} n").unwrap(),
        )
        .unwrap();
        let env = Env::new(ctx, vec![SemValue::one_hot(0)]).unwrap();
        let g = grad(&p, &env, "n", &SemValue::Vec2(1.0, 0.0), 4).unwrap();
        assert_eq!(g, Gradient::Seq(vec![1.0, 0.0, 1.0, 0.0]));
    }

    #[test]
    fn grad_matrix_slot() {
        // single application: b:Bool, m:Bool⊸Bool ⊢ m b is linear in m;
        // loss = Σ_rc M_rc · c_r · b_c, so ∇M = c bᵀ
        let ctx = Ctx::from_binders(vec![
            ("b".to_string(), Ty::Bool),
            ("m".to_string(), Ty::fun(Ty::Bool, Ty::Bool)),
        ]);
        let p = compile_expr(&ctx, &parse("m b").unwrap()).unwrap();
        let m = SemValue::Map(
            MapValue::from_matrix(SemTy::VBool, SemTy::VBool, 2, 2, vec![0.0; 4]).unwrap(),
        );
        let env = Env::new(ctx, vec![SemValue::Vec2(2.0, 3.0), m]).unwrap();
        let g = grad(&p, &env, "m", &SemValue::Vec2(5.0, 7.0), 0).unwrap();
        assert_eq!(
            g,
            Gradient::Matrix {
                rows: 2,
                cols: 2,
                data: vec![10.0, 15.0, 14.0, 21.0],
            }
        );
    }

    #[test]
    fn fd_check_fixtures() {
        let ctx = bool_ctx(&["x"]);
        // dyadic coordinates and a power-of-two step keep the central
        // difference exact for the (linear) identity program
        let env = Env::new(ctx.clone(), vec![SemValue::Vec2(0.5, -1.25)]).unwrap();
        let h = 2.0_f64.powi(-17);

        let id = compile_expr(&ctx, &parse("x").unwrap()).unwrap();
        let err = fd_check(&id, &env, "x", &SemValue::Vec2(1.0, 2.0), 0, h).unwrap();
        assert!(err <= 1e-12, "identity fd error {}", err);

        let err = fd_check(&id, &env, "x", &SemValue::Vec2(0.0, 0.0), 0, h).unwrap();
        assert_eq!(err, 0.0);

        let ctx = Ctx::from_binders(vec![("n".to_string(), Ty::Nat)]);
        let p = compile_expr(
            &ctx,
            &parse("iter tt {x -> if x then ff else tt} n").unwrap(),
        )
        .unwrap();
        let env = Env::new(
            ctx,
            vec![SemValue::seq(vec![(0, 0.5), (1, -0.25), (3, 2.0)])],
        )
        .unwrap();
        let err = fd_check(&p, &env, "n", &SemValue::Vec2(1.5, -0.5), 6, 1e-5).unwrap();
        assert!(err <= 1e-5, "fd error {}", err);
    }

    #[test]
    fn toy_train_trivial_cases() {
        let sys = DynSystem::example();
        // target f(0) with a one-hot count at 0: already perfect
        let mut init = vec![0.0; 10];
        init[0] = 1.0;
        let r = toy_train(&sys, 0, 3, 0.1, 10, Some(init)).unwrap();
        assert!(r.losses.iter().all(|&l| l == 0.0));
        assert_eq!(r.argmax(), 0);

        // zero learning rate: loss never changes
        let r = toy_train(&sys, 2, 5, 0.0, 10, None).unwrap();
        assert!(r.losses.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn toy_train_converges_on_damped_system() {
        // a contraction keeps the quadratic well-conditioned at lr=0.1
        let sys = DynSystem {
            init: (1.0, 0.0),
            m: [[0.0, 0.5], [0.5, 0.0]],
        };
        let r = toy_train(&sys, 2, 2000, 0.1, 6, None).unwrap();
        assert!(
            r.final_loss() < 1e-6,
            "final loss {} after {} steps",
            r.final_loss(),
            r.losses.len() - 1
        );
        assert!(r.losses[0] > r.final_loss());
    }
}
