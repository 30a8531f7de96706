//! Command-line front end: check, run, compile, matrix, grad, fuzz, and a
//! small training demo. Results go to stdout (JSON where structured), errors
//! to stderr. Exit codes: 0 success, 1 parse/type error, 2 verification
//! failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use cajal::ast::{parse, pretty, Ctx};
use cajal::compile::{compile, env_from_json, link, Env};
use cajal::diffcheck::{fd_check, grad, toy_train, DynSystem, Gradient};
use cajal::eval::{eval, EvalBudget};
use cajal::fuzz::{run_fuzz, GenConfig};
use cajal::semval::{from_json, to_json, SemValue};
use cajal::typecheck::typecheck;

#[derive(Parser)]
#[command(name = "cajal", version, about = "A linear language compiled to multilinear maps")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Typecheck a program and print its type
    Check {
        file: PathBuf,
        /// Print the full derivation tree
        #[arg(long)]
        emit_derivation: bool,
    },
    /// Typecheck and evaluate a closed program
    Run { file: PathBuf },
    /// Compile a program and print its denotation as JSON
    Compile {
        file: PathBuf,
        /// JSON file with ordered bindings: {"bindings":[{"name":..,"type":..,"value":..}]}
        #[arg(long)]
        env: Option<PathBuf>,
        /// Truncation for encoding map-valued results as matrices
        #[arg(long, default_value_t = 10)]
        trunc: usize,
    },
    /// Print the dense matrix of a one-binder base-to-base program
    Matrix {
        file: PathBuf,
        #[arg(long, default_value_t = 10)]
        trunc: usize,
    },
    /// Differentiate a linked program with respect to one binder
    Grad {
        file: PathBuf,
        #[arg(long)]
        env: PathBuf,
        /// Binder to differentiate with respect to
        #[arg(long)]
        wrt: String,
        /// JSON file holding the cotangent value
        #[arg(long)]
        cotangent: PathBuf,
        #[arg(long, default_value_t = 10)]
        trunc: usize,
        /// Also verify against central finite differences
        #[arg(long)]
        fd: bool,
    },
    /// Generate random well-typed programs and differentially test the compiler
    Fuzz {
        #[arg(long, default_value_t = 1000)]
        trials: usize,
        #[arg(long, default_value_t = 6)]
        depth: usize,
        #[arg(long, env = "CAJAL_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Gradient-descent demo: fit an iteration count to a target state
    DemoTrain {
        #[arg(long, default_value_t = 2)]
        target_step: usize,
        #[arg(long, default_value_t = 500)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 6)]
        trunc: usize,
    },
}

fn read_file(path: &PathBuf) -> Result<String, String> {
    std::fs::read_to_string(path).map_err(|e| format!("{}: {}", path.display(), e))
}

/// Parse an environment file.
fn read_env(path: &PathBuf) -> Result<Env, String> {
    let text = read_file(path)?;
    let j: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| format!("{}: {}", path.display(), e))?;
    env_from_json(&j).map_err(|e| format!("{}: {}", path.display(), e))
}

fn gradient_json(g: &Gradient) -> serde_json::Value {
    match g {
        Gradient::Vec2(a, b) => json!({"kind": "bool", "vec": [a, b]}),
        Gradient::Seq(v) => json!({"kind": "nat_dense", "entries": v}),
        Gradient::Matrix { rows, cols, data } => {
            json!({"kind": "matrix", "rows": rows, "cols": cols, "data": data})
        }
    }
}

// exit 1: parse/type errors; exit 2: verification failures
fn fail(msg: String, code: u8) -> ExitCode {
    eprintln!("error: {}", msg);
    ExitCode::from(code)
}

fn main() -> ExitCode {
    match Cli::parse().cmd {
        Cmd::Check {
            file,
            emit_derivation,
        } => {
            let src = match read_file(&file) {
                Ok(s) => s,
                Err(e) => return fail(e, 1),
            };
            let e = match parse(&src) {
                Ok(e) => e,
                Err(err) => return fail(format!("{}: {}", file.display(), err), 1),
            };
            match typecheck(&Ctx::empty(), &e) {
                Ok(d) => {
                    println!("{}", d.ty);
                    if emit_derivation {
                        print!("{}", d.render());
                    }
                    ExitCode::SUCCESS
                }
                Err(err) => fail(format!("{}: {}", file.display(), err), 1),
            }
        }
        Cmd::Run { file } => {
            let src = match read_file(&file) {
                Ok(s) => s,
                Err(e) => return fail(e, 1),
            };
            let e = match parse(&src) {
                Ok(e) => e,
                Err(err) => return fail(format!("{}: {}", file.display(), err), 1),
            };
            if let Err(err) = typecheck(&Ctx::empty(), &e) {
                return fail(format!("{}: {}", file.display(), err), 1);
            }
            match eval(&e, EvalBudget::default()) {
                Ok(v) => {
                    println!("{}", pretty(&v));
                    ExitCode::SUCCESS
                }
                Err(err) => fail(err.to_string(), 2),
            }
        }
        Cmd::Compile { file, env, trunc } => {
            let src = match read_file(&file) {
                Ok(s) => s,
                Err(e) => return fail(e, 1),
            };
            let e = match parse(&src) {
                Ok(e) => e,
                Err(err) => return fail(format!("{}: {}", file.display(), err), 1),
            };
            let environment = match env {
                Some(path) => match read_env(&path) {
                    Ok(x) => x,
                    Err(err) => return fail(err, 1),
                },
                None => Env::unit(),
            };
            let d = match typecheck(environment.signature(), &e) {
                Ok(d) => d,
                Err(err) => return fail(format!("{}: {}", file.display(), err), 1),
            };
            let p = compile(&d);
            let linked = link(&p, &environment)
                .map_err(|err| err.to_string())
                .and_then(|v| to_json(&v, trunc).map_err(|err| err.to_string()));
            match linked {
                Ok(j) => {
                    println!("{}", j);
                    ExitCode::SUCCESS
                }
                Err(err) => fail(err.to_string(), 1),
            }
        }
        Cmd::Matrix { file, trunc } => {
            let src = match read_file(&file) {
                Ok(s) => s,
                Err(e) => return fail(e, 1),
            };
            let e = match parse(&src) {
                Ok(e) => e,
                Err(err) => return fail(format!("{}: {}", file.display(), err), 1),
            };
            // the single binder is whatever free variable the program uses;
            // its type must be annotated via a lambda if the program is
            // closed, so accept both: a closed lambda is probed directly
            let result = (|| -> Result<(usize, usize, Vec<f64>), String> {
                let d = typecheck(&Ctx::empty(), &e).map_err(|err| err.to_string())?;
                let p = compile(&d);
                // unwrap one lambda: probe the map it denotes
                match link(&p, &Env::unit()).map_err(|err| err.to_string())? {
                    SemValue::Map(m) => {
                        cajal::semval::map_matrix(&m, trunc).map_err(|err| err.to_string())
                    }
                    _ => Err("program must denote a base-to-base map (a lambda)".to_string()),
                }
            })();
            match result {
                Ok((rows, cols, data)) => {
                    println!(
                        "{}",
                        json!({"kind": "matrix", "rows": rows, "cols": cols, "data": data})
                    );
                    ExitCode::SUCCESS
                }
                Err(err) => fail(err, 1),
            }
        }
        Cmd::Grad {
            file,
            env,
            wrt,
            cotangent,
            trunc,
            fd,
        } => {
            let out = (|| -> Result<(serde_json::Value, Option<f64>), String> {
                let src = read_file(&file)?;
                let e = parse(&src).map_err(|err| format!("{}: {}", file.display(), err))?;
                let env = read_env(&env)?;
                let d = typecheck(env.signature(), &e).map_err(|err| err.to_string())?;
                let p = compile(&d);
                let cot_text = read_file(&cotangent)?;
                let cot_json: serde_json::Value =
                    serde_json::from_str(&cot_text).map_err(|err| err.to_string())?;
                let cot = from_json(&cot_json, &p.result).map_err(|err| err.to_string())?;
                let g = grad(&p, &env, &wrt, &cot, trunc).map_err(|err| err.to_string())?;
                let fd_err = if fd {
                    Some(
                        fd_check(&p, &env, &wrt, &cot, trunc, 1e-5)
                            .map_err(|err| err.to_string())?,
                    )
                } else {
                    None
                };
                Ok((gradient_json(&g), fd_err))
            })();
            match out {
                Ok((j, fd_err)) => {
                    match fd_err {
                        Some(err) => {
                            println!("{}", json!({"gradient": j, "fd_max_rel_error": err}));
                            if err > 1e-5 {
                                return fail(
                                    format!("finite-difference check failed: {}", err),
                                    2,
                                );
                            }
                        }
                        None => println!("{}", json!({"gradient": j})),
                    }
                    ExitCode::SUCCESS
                }
                Err(err) => fail(err, 1),
            }
        }
        Cmd::Fuzz {
            trials,
            depth,
            seed,
            json: json_out,
        } => {
            let mut cfg = GenConfig::new(seed);
            cfg.max_depth = depth;
            let report = run_fuzz(&cfg, trials);
            if json_out {
                let failures: Vec<_> = report
                    .failures
                    .iter()
                    .map(|(e, r)| json!({"program": pretty(e), "reason": r}))
                    .collect();
                let coverage: serde_json::Map<String, serde_json::Value> = report
                    .rule_coverage
                    .iter()
                    .map(|(r, f)| (r.to_string(), json!(f)))
                    .collect();
                println!(
                    "{}",
                    json!({
                        "trials": report.trials,
                        "passes": report.passes,
                        "failures": failures,
                        "rule_coverage": coverage,
                        "budget_exceeded": report.budget_exceeded,
                        "stuck": report.stuck,
                    })
                );
            } else {
                println!("{}/{} trials passed", report.passes, report.trials);
                for (rule, frac) in &report.rule_coverage {
                    println!("  rule {:<5} in {:5.1}% of programs", rule.to_string(), frac * 100.0);
                }
                for (e, reason) in &report.failures {
                    println!("FAIL {} — {}", pretty(e), reason);
                }
            }
            if report.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(2)
            }
        }
        Cmd::DemoTrain {
            target_step,
            steps,
            lr,
            trunc,
        } => {
            // a damped rotation keeps gradient descent well-conditioned
            let sys = DynSystem {
                init: (1.0, 0.0),
                m: [[0.0, 0.5], [0.5, 0.0]],
            };
            match toy_train(&sys, target_step, steps, lr, trunc, None) {
                Ok(r) => {
                    println!("step,loss");
                    for (i, l) in r.losses.iter().enumerate() {
                        println!("{},{}", i, l);
                    }
                    eprintln!(
                        "final loss {:.3e}, count argmax {}",
                        r.final_loss(),
                        r.argmax()
                    );
                    ExitCode::SUCCESS
                }
                Err(err) => fail(err.to_string(), 2),
            }
        }
    }
}
