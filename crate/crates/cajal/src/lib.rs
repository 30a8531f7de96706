//! A linear lambda calculus with booleans, naturals, and iteration, compiled
//! to multilinear maps over real vector spaces.
//!
//! The pipeline: [`ast`] parses source text, [`typecheck`] decides the linear
//! typing judgment and records context splits in a derivation, [`eval`] runs
//! programs by substitution, and [`compile`] turns derivations into
//! multilinear maps over the value algebra of [`semval`]. [`diffcheck`]
//! differentiates compiled programs and reproduces the recurrent-unfolding
//! construction; [`fuzz`] generates random well-typed programs and checks the
//! evaluator and compiler against each other.

pub mod ast;
pub mod compile;
pub mod diffcheck;
pub mod eval;
pub mod fuzz;
pub mod semval;
pub mod typecheck;

pub use ast::{alpha_eq, alpha_rename, parse, parse_ty, pretty, Ctx, Expr, Ty};
pub use compile::{compile, compile_expr, link, matrix_of, CompiledProgram, Env};
pub use eval::{eval, EvalBudget, EvalError};
pub use semval::{SemTy, SemValue};
pub use typecheck::{typecheck, validate, Derivation, TypeError};
